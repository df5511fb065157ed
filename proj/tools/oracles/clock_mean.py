# E V_t and E|Y_u|^2 for Y_u = int_0^{u-1} (B_u - B_s)/|B_u - B_s|^3 ds.
# Conditioning on the shorter lag a, the longer lag adds an independent
# Gaussian of variance d, so the inner expectation is the field of a smeared
# charge: F(a/d)/a^2. Then E|Y_u|^2 = 2 int_1^u H(a/(u-a)) da/a with
# H(x) = int_x^inf F(k)/k^2 dk, and H(0) = 1 gives the 2 log u leading term.
import numpy as np
from scipy import integrate, special
c=np.sqrt(2/np.pi)
def G(z): return special.erf(z/np.sqrt(2)) - c*z*np.exp(-z*z/2)
def F(k):
    f=lambda R: G(R*np.sqrt(k))/R**2*np.exp(-R*R/2)
    return c*(integrate.quad(f,0,1/np.sqrt(k),limit=200)[0]+integrate.quad(f,1/np.sqrt(k),np.inf,limit=200)[0])
# H(x)=∫_x^∞ F(κ)/κ² dκ, tabulated on log grid
ks=np.logspace(-8,8,1601)
Fk=np.array([F(k) for k in ks])
g=Fk/ks**2
# cumulative from the top in log variable: ∫ g κ dlnκ
lk=np.log(ks); integrand=g*ks
Hc=np.concatenate([np.cumsum(((integrand[1:]+integrand[:-1])/2*np.diff(lk))[::-1])[::-1],[0]])
Hc+= 2*c/np.sqrt(ks[-1])  # tail ∫ √(2/π) κ^{-3/2}
Hc0 = Hc[0] + integrate.quad(lambda k: F(k)/k**2, 0, ks[0])[0]
print("H(0) =", Hc0)
def H(x): return np.interp(np.log(max(x,1e-8)), lk, Hc) if x>1e-8 else Hc0
def EY2(u): return 2*integrate.quad(lambda a: H(a/(u-a))/a, 1, u, limit=200, points=[u/2])[0] if u>1 else 0
def EV(t):
    us=np.concatenate([np.linspace(1,2,41)[:-1],np.geomspace(2,t,400)])
    y=np.array([EY2(u) for u in us])
    return np.trapezoid(y,us)
for t in (100,200,250,500,1000,2000):
    v=EV(t); print(t, v, v/(2*t*np.log(t)), EY2(t), 2*np.log(t))
