#include "sausage/ilt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "sausage/errors.hpp"
#include "sausage/rng.hpp"

namespace sausage {

namespace {

constexpr double kInvTwoPi = 0.5 / std::numbers::pi;
constexpr double kGridTol = 1e-9;

// Exact grid index of time t on a grid of spacing h.
std::size_t on_grid(double t, double h, const char* what) {
  const double q = t / h;
  const double r = std::round(q);
  if (!(r >= 0.0) || std::abs(q - r) > kGridTol * std::max(1.0, r))
    throw DomainError(std::string(what) + " is not on the quadrature grid");
  return static_cast<std::size_t>(r);
}

// Inner nodes (every stride-th path point) in structure-of-arrays form.
struct InnerNodes {
  std::vector<double> x, y, z;
  std::size_t stride = 1;

  InnerNodes(const Path3D& path, std::size_t stride_, std::size_t last_index) : stride(stride_) {
    const std::size_t n = last_index / stride + 1;
    x.resize(n);
    y.resize(n);
    z.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const Vec3& p = path.points[j * stride];
      x[j] = p.x;
      y[j] = p.y;
      z[j] = p.z;
    }
  }
};

struct FieldSum {
  Vec3 value{};
  std::size_t clamps = 0;
};

// Σ_{j < n} (c - P_j)/|c - P_j|³ with |c - P_j| clamped below at sqrt(floor2).
// Four interleaved accumulators combined in a fixed order.
FieldSum field_sum(const double* xs, const double* ys, const double* zs, std::size_t n,
                   const Vec3& c, double floor2, double* r2_out) {
  double ax[4] = {0, 0, 0, 0};
  double ay[4] = {0, 0, 0, 0};
  double az[4] = {0, 0, 0, 0};
  std::size_t cl[4] = {0, 0, 0, 0};
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    for (int l = 0; l < 4; ++l) {
      const double dx = c.x - xs[j + l];
      const double dy = c.y - ys[j + l];
      const double dz = c.z - zs[j + l];
      double r2 = dx * dx + dy * dy + dz * dz;
      r2_out[j + l] = r2;
      cl[l] += r2 < floor2 ? 1 : 0;
      r2 = r2 < floor2 ? floor2 : r2;
      const double inv = 1.0 / (r2 * std::sqrt(r2));
      ax[l] += dx * inv;
      ay[l] += dy * inv;
      az[l] += dz * inv;
    }
  }
  for (; j < n; ++j) {
    const double dx = c.x - xs[j];
    const double dy = c.y - ys[j];
    const double dz = c.z - zs[j];
    double r2 = dx * dx + dy * dy + dz * dz;
    r2_out[j] = r2;
    cl[0] += r2 < floor2 ? 1 : 0;
    r2 = r2 < floor2 ? floor2 : r2;
    const double inv = 1.0 / (r2 * std::sqrt(r2));
    ax[0] += dx * inv;
    ay[0] += dy * inv;
    az[0] += dz * inv;
  }
  FieldSum out;
  out.value = {(ax[0] + ax[1]) + (ax[2] + ax[3]), (ay[0] + ay[1]) + (ay[2] + ay[3]),
               (az[0] + az[1]) + (az[2] + az[3])};
  out.clamps = (cl[0] + cl[1]) + (cl[2] + cl[3]);
  return out;
}

Vec3 kernel(const Vec3& c, const Vec3& p, double floor2) {
  const Vec3 d = c - p;
  double r2 = norm2(d);
  r2 = r2 < floor2 ? floor2 : r2;
  return d * (1.0 / (r2 * std::sqrt(r2)));
}

double inv_dist(const Vec3& a, const Vec3& b, double floor, std::size_t& clamps) {
  double r = norm(a - b);
  if (r < floor) {
    r = floor;
    ++clamps;
  }
  return 1.0 / r;
}

// Trapezoid of (B_u - B_s)/|B_u - B_s|³ over s ∈ [0, s_end] (path indices),
// using inner nodes at the stride plus a partial last panel.
struct FieldResult {
  Vec3 value{};
  std::size_t clamps = 0;
  std::size_t evals = 0;
};

// ∫_0^1 (c - P(λ))/|c - P(λ)|³ dλ along the segment P(λ) = p0 + λ(p1 - p0),
// in closed form. Near-degenerate configurations (c within `floor` of the
// segment line) fall back to 8-point Gauss-Legendre on the clamped kernel.
Vec3 segment_field(const Vec3& c, const Vec3& p0, const Vec3& p1, double floor,
                   std::size_t& clamps) {
  const Vec3 a = c - p0;
  const Vec3 d = p1 - p0;
  const double A = norm2(d);
  const double B = dot(a, d);
  const double C = norm2(a);
  const double floor2 = floor * floor;
  const double delta = A * C - B * B;
  if (A == 0.0) {
    if (C < floor2) ++clamps;
    return kernel(c, p0, floor2);
  }
  if (delta <= 4.0 * floor2 * A) {
    static constexpr double kNodes[8] = {0.0198550717512319, 0.1016667612931866,
                                         0.2372337950418355, 0.4082826787521751,
                                         0.5917173212478249, 0.7627662049581645,
                                         0.8983332387068134, 0.9801449282487681};
    static constexpr double kWeights[8] = {0.0506142681451881, 0.1111905172266872,
                                           0.1568533229389436, 0.1813418916891810,
                                           0.1813418916891810, 0.1568533229389436,
                                           0.1111905172266872, 0.0506142681451881};
    Vec3 sum{};
    bool clamped = false;
    for (int i = 0; i < 8; ++i) {
      const Vec3 p = p0 + d * kNodes[i];
      if (norm2(c - p) < floor2) clamped = true;
      sum += kernel(c, p, floor2) * kWeights[i];
    }
    if (clamped) ++clamps;
    return sum;
  }
  const double q1 = A - 2.0 * B + C;
  const double s0 = std::sqrt(C);
  const double s1 = std::sqrt(q1);
  const double i0 = ((A - B) / s1 + B / s0) / delta;
  const double i1 = ((B - C) / s1 + C / s0) / delta;
  return a * i0 - d * i1;
}

// Field at c of a unit Gaussian charge of per-coordinate variance `var`
// centred at m: the point kernel times the enclosed fraction
// G(z) = erf(z/√2) - √(2/π) z e^{-z²/2}, z = |c - m|/√var.
Vec3 smeared_kernel(const Vec3& c, const Vec3& m, double var, double floor2, std::size_t& clamps) {
  const Vec3 d = c - m;
  const double r2 = norm2(d);
  const double z2 = var > 0.0 ? r2 / var : std::numeric_limits<double>::infinity();
  constexpr double kRoot2OverPi = 0.7978845608028654;
  if (z2 < 0.01) {
    // G(z)/z³ = √(2/π)(1/3 - z²/10 + z⁴/56 - ...).
    const double g = kRoot2OverPi * (1.0 / 3.0 - z2 / 10.0 + z2 * z2 / 56.0);
    return d * (g / (var * std::sqrt(var)));
  }
  double enclosed = 1.0;
  if (z2 < 100.0) {
    const double z = std::sqrt(z2);
    enclosed = std::erf(z * (1.0 / std::numbers::sqrt2)) - kRoot2OverPi * z * std::exp(-0.5 * z2);
  }
  double rr = r2;
  if (rr < floor2) {
    rr = floor2;
    ++clamps;
  }
  return d * (enclosed / (rr * std::sqrt(rr)));
}

// ∫_0^1 dλ E[(c - b_λ)/|c - b_λ|³] over the Brownian bridge b from p0 to p1
// in time h (per-coordinate variance h λ(1-λ)). The bridge average has only
// a logarithmic singularity where the straight chord has a 1/r one. Gauss-
// Legendre on dyadic panels graded toward each endpoint, refined only while
// the panel's bridge scale is comparable to the distance to that endpoint.
Vec3 bridge_segment_field(const Vec3& c, const Vec3& p0, const Vec3& p1, double h, double floor,
                          std::size_t& clamps) {
  static constexpr double kNodes[4] = {0.0694318442029737, 0.3300094782075719,
                                       0.6699905217924281, 0.9305681557970263};
  static constexpr double kWeights[4] = {0.1739274225658759, 0.3260725774341241,
                                         0.3260725774341241, 0.1739274225658759};
  const double floor2 = floor * floor;
  const Vec3 d = p1 - p0;
  std::size_t clamped = 0;
  auto panel = [&](double lo, double hi) {
    Vec3 acc{};
    const double w = hi - lo;
    for (int i = 0; i < 4; ++i) {
      const double lam = lo + w * kNodes[i];
      acc += smeared_kernel(c, p0 + d * lam, h * lam * (1.0 - lam), floor2, clamped) * (kWeights[i] * w);
    }
    return acc;
  };
  Vec3 sum{};
  for (int side = 0; side < 2; ++side) {
    const double r2 = norm2(c - (side == 0 ? p0 : p1));
    double a = 0.5;
    // Panels [a/2, a] on this half, mirrored for the right half.
    for (int level = 0; level < 30 && 25.0 * h * a >= r2; ++level) {
      const double lo = a * 0.5;
      sum += side == 0 ? panel(lo, a) : panel(1.0 - a, 1.0 - lo);
      a = lo;
    }
    sum += side == 0 ? panel(0.0, a) : panel(1.0 - a, 1.0);
  }
  if (clamped > 0) ++clamps;
  return sum;
}

// Leaf step of the lazy refinement below; bridge fluctuations under it are
// averaged out analytically.
constexpr double kLeafStep = 1e-5;

// Unit-variance Brownian-bridge midpoint offset for node `node` (heap order)
// of path step i. A pure function of the seed, so every evaluation point
// sees the same refined path.
Vec3 bridge_offset(const SeedInfo& seed, std::uint64_t i, std::uint32_t node) {
  const std::uint64_t k = mix64(seed.base_seed ^ 0x6c617a7962726467ULL);
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(k),
                                         static_cast<std::uint32_t>(k >> 32)};
  std::array<double, 4> u{};
  for (std::uint32_t b = 0; b < 2; ++b) {
    const auto r = CounterRng::philox({static_cast<std::uint32_t>(i),
                                       static_cast<std::uint32_t>(i >> 32), seed.replica_index,
                                       2 * node + b},
                                      key);
    for (int j = 0; j < 2; ++j) {
      const std::uint64_t w = (static_cast<std::uint64_t>(r[2 * j]) << 32) | r[2 * j + 1];
      u[2 * b + j] = static_cast<double>(w >> 11) * 0x1.0p-53;
    }
  }
  const double ra = std::sqrt(-2.0 * std::log(1.0 - u[0]));
  const double rb = std::sqrt(-2.0 * std::log(1.0 - u[2]));
  const double ta = 2.0 * std::numbers::pi * u[1];
  const double tb = 2.0 * std::numbers::pi * u[3];
  return {ra * std::cos(ta), ra * std::sin(ta), rb * std::cos(tb)};
}

// ∫_0^1 dλ of the kernel along one path step. Within 2.5 bridge scales of the
// chord the straight segment has a 1/r singularity the Brownian path lacks,
// so the step is refined with exact bridge midpoints down to kLeafStep and
// the leaf is bridge-averaged; elsewhere the chord is integrated exactly.
Vec3 refined_field(const Vec3& c, const Vec3& p0, const Vec3& p1, double hs, const SeedInfo& seed,
                   std::uint64_t i, std::uint32_t node, double floor, std::size_t& clamps) {
  if (segment_dist2(c, p0, p1) >= 6.25 * hs) return segment_field(c, p0, p1, floor, clamps);
  if (hs <= kLeafStep || node >= (1u << 30)) return bridge_segment_field(c, p0, p1, hs, floor, clamps);
  const Vec3 m = (p0 + p1) * 0.5 + bridge_offset(seed, i, node) * std::sqrt(0.25 * hs);
  return (refined_field(c, p0, m, 0.5 * hs, seed, i, 2 * node, floor, clamps) +
          refined_field(c, m, p1, 0.5 * hs, seed, i, 2 * node + 1, floor, clamps)) *
         0.5;
}

Vec3 step_field(const Vec3& c, const Path3D& path, std::size_t i, double floor, std::size_t& clamps) {
  return refined_field(c, path.points[i], path.points[i + 1], path.step_h, path.seed_info, i, 1,
                       floor, clamps);
}

struct FieldScratch {
  std::vector<double> r2;
};

// Trapezoid of (B_u - B_s)/|B_u - B_s|³ over s ∈ [0, s_end] (path indices)
// on the inner nodes plus a partial last panel. Panels with a node closer
// than near_radius to B_u are re-integrated exactly along the path polyline.
FieldResult field_from_origin(const Path3D& path, const InnerNodes& nodes, std::size_t k_u,
                              std::size_t s_end, double h, double floor, double near_radius,
                              FieldScratch& scratch) {
  FieldResult out;
  if (s_end == 0) return out;
  const std::size_t m = nodes.stride;
  const std::size_t last = s_end / m;
  const std::size_t rem = s_end - last * m;
  const double big = static_cast<double>(m) * h;
  const double floor2 = floor * floor;
  const double near2 = near_radius * near_radius;
  const Vec3& c = path.points[k_u];
  const std::size_t n = last + 1;
  scratch.r2.resize(n);
  const FieldSum s = field_sum(nodes.x.data(), nodes.y.data(), nodes.z.data(), n, c, floor2,
                               scratch.r2.data());
  out.clamps = s.clamps;
  out.evals = n;
  const Vec3 f0 = kernel(c, path.points[0], floor2);
  const Vec3 fl = kernel(c, path.points[last * m], floor2);
  out.value = s.value * big - (f0 + fl) * (0.5 * big);

  auto fine_panel = [&](std::size_t i_begin, std::size_t i_end) {
    Vec3 acc{};
    for (std::size_t i = i_begin; i < i_end; ++i)
      acc += step_field(c, path, i, floor, out.clamps);
    out.evals += i_end - i_begin;
    return acc * h;
  };

  if (m > 1) {
    const double* r2 = scratch.r2.data();
    for (std::size_t j = 0; j + 1 < n; ++j) {
      if (r2[j] >= near2 && r2[j + 1] >= near2) continue;
      const Vec3 fa = kernel(c, path.points[j * m], floor2);
      const Vec3 fb = kernel(c, path.points[(j + 1) * m], floor2);
      out.value -= (fa + fb) * (0.5 * big);
      out.value += fine_panel(j * m, (j + 1) * m);
    }
  }
  if (rem > 0) {
    const Vec3& pe = path.points[s_end];
    const double re2 = norm2(c - pe);
    if (m > 1 && (scratch.r2[last] < near2 || re2 < near2)) {
      out.value += fine_panel(last * m, s_end);
    } else {
      if (re2 < floor2) ++out.clamps;
      ++out.evals;
      out.value += (fl + kernel(c, pe, floor2)) * (0.5 * static_cast<double>(rem) * h);
    }
  }
  return out;
}

// Trapezoid at stride m over path indices [0, s_end] of g(j) for j a path
// index.
template <class G>
double trapezoid_indices(std::size_t s_end, std::size_t m, double h, G&& g) {
  if (s_end == 0) return 0.0;
  const std::size_t last = s_end / m;
  const std::size_t rem = s_end - last * m;
  const double big = static_cast<double>(m) * h;
  double sum = 0.0;
  double g_last = 0.0;
  if (last > 0) {
    sum = 0.5 * g(0);
    for (std::size_t j = 1; j < last; ++j) sum += g(j * m);
    g_last = g(last * m);
    sum += 0.5 * g_last;
    sum *= big;
  } else {
    g_last = g(0);
  }
  if (rem > 0) sum += 0.5 * static_cast<double>(rem) * h * (g_last + g(s_end));
  return sum;
}

struct SweepState {
  double n_mart = 0.0;
  double v_clock = 0.0;
  std::size_t clamps = 0;
  std::size_t evals = 0;
};

// Sweeps u over the outer grid from 1 to the largest checkpoint index and
// calls emit(k, state) at each checkpoint index (sorted ascending).
template <class Emit>
void sweep(const Path3D& path, const QuadratureConfig& q, std::span<const std::size_t> ks,
           Emit&& emit) {
  const double h = path.step_h;
  const std::size_t n1 = on_grid(1.0, h, "unit time gap");
  const std::size_t k_last = ks.back();
  const InnerNodes nodes(path, q.inner_stride(), k_last >= n1 ? k_last - n1 : 0);
  SweepState st;
  FieldScratch scratch;
  const double near_radius = q.near_factor * std::sqrt(q.inner_step);
  Vec3 y_prev{};
  std::size_t next = 0;
  while (next < ks.size() && ks[next] < n1) ++next;
  for (std::size_t k = n1; k <= k_last; ++k) {
    const FieldResult y =
        field_from_origin(path, nodes, k, k - n1, h, q.denom_floor, near_radius, scratch);
    st.clamps += y.clamps;
    st.evals += y.evals;
    if (k > n1) st.v_clock += 0.5 * h * (norm2(y_prev) + norm2(y.value));
    while (next < ks.size() && ks[next] == k) emit(k, st), ++next;
    if (k < k_last) st.n_mart += -kInvTwoPi * dot(y.value, path.points[k + 1] - path.points[k]);
    y_prev = y.value;
  }
}

std::size_t checked_time_index(const Path3D& path, double t, const char* what) {
  if (t > path.t_max * (1.0 + kGridTol)) throw DomainError(std::string(what) + " exceeds t_max");
  const std::size_t k = on_grid(t, path.step_h, what);
  if (k >= path.size()) throw DomainError(std::string(what) + " exceeds the path length");
  return k;
}

}  // namespace

void QuadratureConfig::validate(const Path3D& path) const {
  if (!(outer_step > 0.0) || std::abs(outer_step - path.step_h) > 1e-12 * path.step_h)
    throw ConfigError("quadrature outer step must equal the path step");
  if (!(inner_step >= outer_step * (1.0 - 1e-12)))
    throw ConfigError("quadrature inner step must be at least the outer step");
  const double ratio = inner_step / outer_step;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw ConfigError("quadrature inner step must be a multiple of the outer step");
  if (!(denom_floor > 0.0) || denom_floor > 1e-2)
    throw ConfigError("denominator floor must lie in (0, 1e-2]");
}

std::size_t QuadratureConfig::inner_stride() const {
  return static_cast<std::size_t>(std::llround(inner_step / outer_step));
}

Vec3 y_field(const Path3D& path, double u, double a, double b, const QuadratureConfig& q) {
  q.validate(path);
  if (!(a >= 0.0) || b < a) throw DomainError("y_field: need 0 <= a <= b");
  if (b >= u) throw DomainError("y_field: need b < u");
  const std::size_t ku = checked_time_index(path, u, "u");
  const std::size_t ka = on_grid(a, path.step_h, "a");
  const std::size_t kb = on_grid(b, path.step_h, "b");
  if (ka == kb) return {};
  const double floor2 = q.denom_floor * q.denom_floor;
  const Vec3& c = path.points[ku];
  const std::size_t m = q.inner_stride();
  // Same rule as the sweep: coarse panels, exact polyline near B_u.
  const double near2 = q.near_factor * q.near_factor * q.inner_step;
  const double h = path.step_h;
  std::size_t clamps = 0;
  auto fine = [&](std::size_t i0, std::size_t i1) {
    Vec3 acc{};
    for (std::size_t i = i0; i < i1; ++i)
      acc += step_field(c, path, i, q.denom_floor, clamps);
    return acc * h;
  };
  Vec3 sum{};
  for (std::size_t i0 = ka; i0 < kb; i0 += m) {
    const std::size_t i1 = std::min(i0 + m, kb);
    const Vec3& p0 = path.points[i0];
    const Vec3& p1 = path.points[i1];
    if (m > 1 && (norm2(c - p0) < near2 || norm2(c - p1) < near2)) {
      sum += fine(i0, i1);
    } else {
      sum += (kernel(c, p0, floor2) + kernel(c, p1, floor2)) *
             (0.5 * static_cast<double>(i1 - i0) * h);
    }
  }
  return sum;
}

std::vector<IltRecord> ilt_sweep(const Path3D& path, std::span<const double> checkpoints,
                                 const QuadratureConfig& q) {
  q.validate(path);
  if (checkpoints.empty()) throw ConfigError("ilt_sweep: no checkpoints");
  std::vector<std::size_t> ks;
  for (double t : checkpoints) {
    if (!(t >= 2.0)) throw DomainError("ilt checkpoints must be >= 2");
    ks.push_back(checked_time_index(path, t, "checkpoint"));
    if (ks.size() > 1 && ks.back() <= ks[ks.size() - 2])
      throw ConfigError("ilt checkpoints must be strictly increasing");
  }
  const double h = path.step_h;
  const std::size_t n1 = on_grid(1.0, h, "unit time gap");
  const std::size_t m = q.inner_stride();
  std::vector<IltRecord> out;
  sweep(path, q, ks, [&](std::size_t k, const SweepState& st) {
    IltRecord r;
    r.t = static_cast<double>(k) * h;
    r.n_mart = st.n_mart;
    r.v_clock = st.v_clock;
    std::size_t clamps = st.clamps;
    const std::size_t s_end = k - n1;
    const Vec3& bt = path.points[k];
    const double end = trapezoid_indices(s_end, m, h, [&](std::size_t j) {
      return inv_dist(bt, path.points[j], q.denom_floor, clamps);
    });
    const double diag = trapezoid_indices(s_end, m, h, [&](std::size_t j) {
      return inv_dist(path.points[j + n1], path.points[j], q.denom_floor, clamps);
    });
    r.corr_end = -kInvTwoPi * end;
    r.corr_diag = kInvTwoPi * diag;
    r.alpha = (r.n_mart + r.corr_end) + r.corr_diag;
    r.clamp_events = clamps;
    r.kernel_evals = st.evals + 2 * (s_end / m + 2);
    out.push_back(r);
  });
  return out;
}

IltRecord alpha_tanaka(const Path3D& path, double t, const QuadratureConfig& q) {
  if (!(t >= 2.0)) throw DomainError("alpha_tanaka: t must be >= 2");
  const double grid[1] = {t};
  return ilt_sweep(path, grid, q).front();
}

double martingale_N(const Path3D& path, double t, const QuadratureConfig& q) {
  q.validate(path);
  if (t < 1.0 + path.step_h * (1.0 - kGridTol)) throw DomainError("martingale_N: t must be >= 1 + h");
  const std::size_t k = checked_time_index(path, t, "t");
  double n = 0.0;
  const std::size_t ks[1] = {k};
  sweep(path, q, ks, [&](std::size_t, const SweepState& st) { n = st.n_mart; });
  return n;
}

double clock_V(const Path3D& path, double t, const QuadratureConfig& q) {
  q.validate(path);
  if (t < 1.0 - kGridTol) throw DomainError("clock_V: t must be >= 1");
  const std::size_t k = checked_time_index(path, t, "t");
  double v = 0.0;
  const std::size_t ks[1] = {k};
  sweep(path, q, ks, [&](std::size_t, const SweepState& st) { v = st.v_clock; });
  return v;
}

double alpha_mollified_region(const Path3D& path, double horizon, double gap, double rho,
                              double step) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("alpha_mollified: rho must be positive");
  if (!(gap > 0.0) || horizon < gap) throw DomainError("alpha_mollified: need 0 < gap <= horizon");
  if (horizon > path.t_max * (1.0 + kGridTol)) throw DomainError("alpha_mollified: horizon exceeds t_max");
  const double ratio = step / path.step_h;
  if (!(ratio >= 1.0 - 1e-12) || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw ConfigError("alpha_mollified: step must be a multiple of the path step");
  const auto m = static_cast<std::size_t>(std::llround(ratio));
  const std::size_t n_last = on_grid(horizon, step, "horizon");
  const std::size_t n_gap = on_grid(gap, step, "gap");
  if (n_last * m >= path.size()) throw DomainError("alpha_mollified: horizon exceeds the path");

  const double cutoff = 8.0 * rho;
  const double cutoff2 = cutoff * cutoff;
  const double inv_cell = 1.0 / cutoff;
  const double norm_c = std::pow(2.0 * std::numbers::pi * rho * rho, -1.5);
  const double inv_2rho2 = 1.0 / (2.0 * rho * rho);

  // Cell lists of node indices (ascending by construction).
  auto cell_of = [&](const Vec3& p) {
    return std::array<std::int64_t, 3>{static_cast<std::int64_t>(std::floor(p.x * inv_cell)),
                                       static_cast<std::int64_t>(std::floor(p.y * inv_cell)),
                                       static_cast<std::int64_t>(std::floor(p.z * inv_cell))};
  };
  auto key_of = [](std::int64_t x, std::int64_t y, std::int64_t z) {
    return (static_cast<std::uint64_t>(x + (1 << 20)) << 42) |
           (static_cast<std::uint64_t>(y + (1 << 20)) << 21) | static_cast<std::uint64_t>(z + (1 << 20));
  };
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells;
  for (std::size_t i = 0; i + n_gap <= n_last; ++i) {
    const auto c = cell_of(path.points[i * m]);
    cells[key_of(c[0], c[1], c[2])].push_back(static_cast<std::uint32_t>(i));
  }

  double total = 0.0;
  for (std::size_t iu = n_gap; iu <= n_last; ++iu) {
    const double wu = (iu == n_gap || iu == n_last) ? 0.5 * step : step;
    const std::size_t s_last = iu - n_gap;
    if (s_last == 0) continue;
    const Vec3& bu = path.points[iu * m];
    const auto c = cell_of(bu);
    double inner = 0.0;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          auto it = cells.find(key_of(c[0] + dx, c[1] + dy, c[2] + dz));
          if (it == cells.end()) continue;
          for (std::uint32_t is : it->second) {
            if (is > s_last) break;
            const double r2 = norm2(path.points[static_cast<std::size_t>(is) * m] - bu);
            if (r2 > cutoff2) continue;
            const double ws = (is == 0 || is == s_last) ? 0.5 * step : step;
            inner += ws * std::exp(-r2 * inv_2rho2);
          }
        }
    total += wu * inner;
  }
  return norm_c * total;
}

double alpha_mollified(const Path3D& path, double t, double rho, const QuadratureConfig& q) {
  if (!(rho > 0.0)) throw DomainError("alpha_mollified: rho must be positive");
  if (!(t >= 2.0)) throw DomainError("alpha_mollified: t must be >= 2");
  q.validate(path);
  return alpha_mollified_region(path, t, 1.0, rho, path.step_h);
}

void write_ilt_csv(std::ostream& out, std::span<const IltRecord> records) {
  out << "t,alpha,n_mart,v_clock,corr_end,corr_diag,clamp_events\n";
  const auto old = out.precision(17);
  for (const IltRecord& r : records)
    out << r.t << ',' << r.alpha << ',' << r.n_mart << ',' << r.v_clock << ',' << r.corr_end
        << ',' << r.corr_diag << ',' << r.clamp_events << '\n';
  out.precision(old);
}

}  // namespace sausage
