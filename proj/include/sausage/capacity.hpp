#pragma once

#include <cstddef>

#include "sausage/geometry.hpp"
#include "sausage/path.hpp"
#include "sausage/vec3.hpp"

namespace sausage {

// Capacities use the Green kernel 1/(2π|x|) of the generator Δ/2, so a ball
// of radius r has capacity 2πr and the sausage volume grows like C(K)·t.
struct CapacityEstimate {
  enum class Method { ClosedForm, HittingMC };

  double value = 0.0;
  double std_error = 0.0;
  Method method = Method::ClosedForm;
  // Upper bound on the probability mass lost by stopping trials at the
  // horizon, in capacity units. Zero for closed forms.
  double horizon_bias = 0.0;
};

// P(T_eps(x) < ∞) = min(eps/|x|, 1): probability that Brownian motion from x
// ever enters the ball of radius eps around the origin.
double hitting_prob_ball(double eps, const Vec3& x);

CapacityEstimate capacity_ball(double r);

// Signed distance from p to the shape boundary (negative inside).
double distance_to_shape(const Shape& shape, const Vec3& p);

struct HitOutcome {
  bool hit = false;
  double time = 0.0;
  Vec3 position{};  // at the hit, or at the horizon
};

// Runs one Brownian trajectory from `start` until it enters `shape` or the
// clock reaches `horizon`. Steps adapt to the distance d from the shape,
// dt = max((d/6)^2, min_step), and each step is checked for a bridge
// crossing with the half-space approximation exp(-2 d0 d1 / dt).
HitOutcome simulate_hit(const Shape& shape, const Vec3& start, double horizon,
                        double min_step, class CounterRng& rng);

struct HittingFrequency {
  double frequency = 0.0;      // hits before the horizon / trials
  double binomial_sigma = 0.0; // sqrt(p(1-p)/n) at the formula value
  double horizon_bias = 0.0;   // mean continuation bound over unhit trials
  std::size_t trials = 0;
};

// Monte Carlo frequency of hitting Ball(eps) from x before `horizon`;
// randomness keyed on (cfg.base_seed, cfg.replica_index), cfg.step_h is the
// minimum time step.
HittingFrequency hitting_frequency_ball(double eps, const Vec3& x, std::size_t n_trials,
                                        double horizon, const PathConfig& cfg);

// Estimates C(shape) = 2π R P(hit before horizon) with the start uniform on
// the sphere of radius R = launch_radius. The uniform launch is exact for any
// shape inside the sphere: the sphere average of the equilibrium potential is
// C(K)/(2πR). cfg.step_h is the minimum time step.
CapacityEstimate capacity_mc(const Shape& shape, double launch_radius, std::size_t n_trials,
                             double horizon, const PathConfig& cfg);

}  // namespace sausage
