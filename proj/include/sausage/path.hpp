#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sausage/vec3.hpp"

namespace sausage {

struct SeedInfo {
  std::uint64_t base_seed = 0;
  std::uint32_t replica_index = 0;
  friend bool operator==(const SeedInfo&, const SeedInfo&) = default;
};

struct PathConfig {
  std::uint64_t base_seed = 0;
  std::uint32_t replica_index = 0;
  double t_max = 1.0;
  double step_h = 0.01;

  // Throws ConfigError unless t_max >= step_h > 0 and both are finite.
  void validate() const;
};

// A discretized three-dimensional Brownian trajectory (generator Δ/2, i.e.
// per-coordinate variance t) sampled on the uniform grid 0, h, 2h, ...
struct Path3D {
  double step_h = 0.0;
  double t_max = 0.0;
  std::vector<Vec3> points;
  SeedInfo seed_info;

  std::size_t size() const { return points.size(); }
  double time_at(std::size_t k) const { return static_cast<double>(k) * step_h; }
  // Number of whole steps contained in [0, t]; tolerant to round-off when t
  // lies on the grid.
  std::size_t steps_until(double t) const;
};

// Number of grid points for (t_max, h): floor(t_max / h) + 1, with the same
// round-off tolerance as Path3D::steps_until.
std::size_t grid_points(double t_max, double step_h);

Path3D gen_path(const PathConfig& cfg);

struct RadialClock {
  double ratio = 0.0;  // (1/log t) ∫_1^t ds / R_s²
  std::size_t clamp_events = 0;
};

// Radial floor applied to 1/R² integrands.
inline constexpr double kRadialFloor = 1e-6;

// Trapezoid estimate of (1/log t) ∫_1^t ds/|B_s|² on the path grid.
// Requires e <= t <= t_max and at least two samples in [1, t].
RadialClock radial_clock_ratio(const Path3D& path, double t);

// Brownian rescaling u -> λ^{-1/2} B_{λu}: the grid maps onto itself with
// step h/λ. λ must be an integer m or 1/m.
Path3D rescale_path(const Path3D& path, double lambda);

// Keeps every m-th point (an exact Brownian path on step m·h).
Path3D subsample_path(const Path3D& path, std::size_t m);

// Inserts conditionally exact Brownian-bridge midpoints, halving the step.
// Randomness is keyed on the path's seed info and `level`.
Path3D refine_path(const Path3D& path, std::uint32_t level = 1);

// Binary dump: "WSLB1", step_h and t_max (f64 LE), point count (u64 LE),
// then x,y,z triples (f64 LE).
void write_path_binary(std::ostream& out, const Path3D& path);
Path3D read_path_binary(std::istream& in);

}  // namespace sausage
