#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "sausage/path.hpp"
#include "sausage/vec3.hpp"

namespace sausage {

// Two-scale quadrature for the self-intersection local time: the outer
// (Itô) grid is the path grid, inner ds-integrals use the coarser step H.
// Inner panels with a node within near_factor·√H of B_u are integrated
// exactly along the path polyline instead: point evaluation of the 1/r²
// kernel there has an error whose second moment grows like 1/denom_floor.
struct QuadratureConfig {
  double outer_step = 0.01;   // must equal path.step_h
  double inner_step = 0.5;    // H, an integer multiple of outer_step
  double denom_floor = 1e-3;  // clamp for |B_u - B_s|
  double near_factor = 4.0;

  void validate(const Path3D& path) const;
  // H / h as an integer.
  std::size_t inner_stride() const;
};

struct IltRecord {
  double t = 0.0;
  double alpha = 0.0;      // n_mart + corr_end + corr_diag, summed in that order
  double n_mart = 0.0;     // N_t = -(1/2π) ∫_1^t dB_u · Y_u(0, u-1)
  double v_clock = 0.0;    // V_t = ∫_1^t |Y_u(0, u-1)|² du
  double corr_end = 0.0;   // -(1/2π) ∫_0^{t-1} ds / |B_t - B_s|
  double corr_diag = 0.0;  // +(1/2π) ∫_0^{t-1} ds / |B_{1+s} - B_s|
  std::size_t clamp_events = 0;
  std::size_t kernel_evals = 0;
};

// Y_u(a, b) = ∫_a^b ds (B_u - B_s)/|B_u - B_s|³ by trapezoid at the inner step.
Vec3 y_field(const Path3D& path, double u, double a, double b, const QuadratureConfig& q);

// Itô sum with strictly left-point evaluation of Y.
double martingale_N(const Path3D& path, double t, const QuadratureConfig& q);

double clock_V(const Path3D& path, double t, const QuadratureConfig& q);

// Tanaka-type representation of α(0, A_t), A_t = {0 <= s <= u-1 <= t-1}.
IltRecord alpha_tanaka(const Path3D& path, double t, const QuadratureConfig& q);

// One sweep of the outer grid emitting a record at each checkpoint (each >= 2
// and on the outer grid).
std::vector<IltRecord> ilt_sweep(const Path3D& path, std::span<const double> checkpoints,
                                 const QuadratureConfig& q);

// ∫∫_{0 <= s <= u-gap <= horizon-gap} φ_ρ(B_s - B_u) ds du with φ_ρ the
// centred Gaussian density of scale ρ, by product trapezoid at `step` (a
// multiple of the path step). Pairs farther apart than 8ρ are skipped.
double alpha_mollified_region(const Path3D& path, double horizon, double gap, double rho,
                              double step);

// α_ρ(0, A_t), the mollified oracle for alpha_tanaka, on the path step.
double alpha_mollified(const Path3D& path, double t, double rho, const QuadratureConfig& q);

// CSV with header `t,alpha,n_mart,v_clock,corr_end,corr_diag,clamp_events`.
void write_ilt_csv(std::ostream& out, std::span<const IltRecord> records);

}  // namespace sausage
