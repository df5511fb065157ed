#include "sausage/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sausage/errors.hpp"
#include "sausage/rng.hpp"

namespace sausage {

namespace {

Vec3 gaussian3(CounterRng& rng) {
  const double x = rng.normal();
  const double y = rng.normal();
  const double z = rng.normal();
  return {x, y, z};
}

Vec3 uniform_on_sphere(CounterRng& rng, double radius) {
  Vec3 g;
  double n2 = 0.0;
  do {
    g = gaussian3(rng);
    n2 = norm2(g);
  } while (n2 < 1e-300);
  return g * (radius / std::sqrt(n2));
}

}  // namespace

double hitting_prob_ball(double eps, const Vec3& x) {
  const double r = norm(x);
  if (r <= eps) return 1.0;
  return eps / r;
}

CapacityEstimate capacity_ball(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("capacity_ball: radius must be positive");
  return {2.0 * std::numbers::pi * r, 0.0, CapacityEstimate::Method::ClosedForm, 0.0};
}

double distance_to_shape(const Shape& shape, const Vec3& p) {
  if (shape.kind == Shape::Kind::Ball) return norm(p) - shape.radius;
  const Vec3& e = shape.half_extents;
  const Vec3 q{std::abs(p.x) - e.x, std::abs(p.y) - e.y, std::abs(p.z) - e.z};
  const Vec3 outside{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
  const double inside = std::min(std::max({q.x, q.y, q.z}), 0.0);
  return norm(outside) + inside;
}

HitOutcome simulate_hit(const Shape& shape, const Vec3& start, double horizon, double min_step,
                        CounterRng& rng) {
  HitOutcome out;
  Vec3 x = start;
  double d = distance_to_shape(shape, x);
  double t = 0.0;
  if (d <= 0.0) {
    out.hit = true;
    out.position = x;
    return out;
  }
  while (t < horizon) {
    const double dt = std::min(std::max(d * d / 36.0, min_step), horizon - t);
    const Vec3 next = x + gaussian3(rng) * std::sqrt(dt);
    const double d_next = distance_to_shape(shape, next);
    t += dt;
    if (d_next <= 0.0 || rng.uniform() < std::exp(-2.0 * d * d_next / dt)) {
      out.hit = true;
      out.time = t;
      out.position = next;
      return out;
    }
    x = next;
    d = d_next;
  }
  out.time = t;
  out.position = x;
  return out;
}

HittingFrequency hitting_frequency_ball(double eps, const Vec3& x, std::size_t n_trials,
                                        double horizon, const PathConfig& cfg) {
  if (!(eps > 0.0)) throw ConfigError("hitting frequency: eps must be positive");
  if (n_trials == 0) throw ConfigError("hitting frequency: need at least one trial");
  if (!(horizon > 0.0) || !(cfg.step_h > 0.0)) throw ConfigError("hitting frequency: bad horizon or step");
  const Shape ball = Shape::ball(eps);
  CounterRng rng(cfg.base_seed, cfg.replica_index, Stream::HittingTrials);
  std::size_t hits = 0;
  double tail = 0.0;
  for (std::size_t i = 0; i < n_trials; ++i) {
    const HitOutcome o = simulate_hit(ball, x, horizon, cfg.step_h, rng);
    if (o.hit)
      ++hits;
    else
      tail += hitting_prob_ball(eps, o.position);
  }
  const double n = static_cast<double>(n_trials);
  const double p = hitting_prob_ball(eps, x);
  return {static_cast<double>(hits) / n, std::sqrt(p * (1.0 - p) / n), tail / n, n_trials};
}

CapacityEstimate capacity_mc(const Shape& shape, double launch_radius, std::size_t n_trials,
                             double horizon, const PathConfig& cfg) {
  if (n_trials == 0) throw ConfigError("capacity_mc: n_trials must be positive");
  if (!(launch_radius > 0.0) || shape.circumradius() > launch_radius / 5.0)
    throw ConfigError("capacity_mc: shape must fit inside launch_radius/5");
  if (!(horizon > 0.0) || !(cfg.step_h > 0.0)) throw ConfigError("capacity_mc: bad horizon or step");
  CounterRng rng(cfg.base_seed, cfg.replica_index, Stream::HittingTrials, 1);
  const double rc = shape.circumradius();
  std::size_t hits = 0;
  double tail = 0.0;
  for (std::size_t i = 0; i < n_trials; ++i) {
    const Vec3 start = uniform_on_sphere(rng, launch_radius);
    const HitOutcome o = simulate_hit(shape, start, horizon, cfg.step_h, rng);
    if (o.hit)
      ++hits;
    else
      tail += hitting_prob_ball(rc, o.position);
  }
  const double n = static_cast<double>(n_trials);
  const double p = static_cast<double>(hits) / n;
  // Jeffreys-smoothed proportion keeps the error bar positive at p = 0 or 1.
  const double ps = (static_cast<double>(hits) + 0.5) / (n + 1.0);
  const double scale = 2.0 * std::numbers::pi * launch_radius;
  return {scale * p, scale * std::sqrt(ps * (1.0 - ps) / n), CapacityEstimate::Method::HittingMC,
          scale * tail / n};
}

}  // namespace sausage
