#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "sausage/path.hpp"
#include "sausage/vec3.hpp"

namespace sausage {

// An origin-centred compact set: a ball or an axis-aligned box.
struct Shape {
  enum class Kind { Ball, Box };

  Kind kind = Kind::Ball;
  double radius = 1.0;    // Ball only
  Vec3 half_extents{};    // Box only
  std::optional<double> capacity_hint;

  static Shape ball(double r);
  static Shape box(const Vec3& half_extents);

  // Radius of the smallest origin-centred ball containing the shape.
  double circumradius() const;
  // Radius of the largest origin-centred ball inside the shape.
  double inradius() const;
  double volume() const;
  bool contains(const Vec3& p) const;
  // Whether p lies in segment[a, b] + shape (Minkowski sum).
  bool segment_hits(const Vec3& p, const Vec3& a, const Vec3& b) const;
};

struct VolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::size_t clamp_events = 0;
  Vec3 box_lo{};
  Vec3 box_hi{};

  double box_volume() const {
    const Vec3 d = box_hi - box_lo;
    return d.x * d.y * d.z;
  }
};

// Spatial hash over the segments of a path prefix. Each segment is registered
// in every cell met by its bounding box inflated by the shape circumradius,
// with cell edge equal to that circumradius; per-cell lists are sorted by
// segment index. The set of registered cells is the sampling domain: it
// covers the whole tube.
class TubeIndex {
 public:
  // Indexes segments 0..n_steps-1 (a single degenerate segment when
  // n_steps == 0). When `mask` is given, only cells present in the mask are
  // created, which restricts the index to the mask's domain.
  TubeIndex(const Path3D& path, const Shape& shape, std::size_t n_steps,
            const TubeIndex* mask = nullptr);

  struct Hit {
    std::size_t segment;
    bool start_point;  // p ∈ points[segment] + K
  };

  std::optional<Hit> first_hit(const Vec3& p) const;
  // Whether p lies in the tube over the first `steps` steps (steps <= n_steps).
  bool contains(const Vec3& p, std::size_t steps) const;

  std::size_t cell_count() const { return cell_keys_.size(); }
  double cell_size() const { return cell_; }
  double domain_volume() const;
  // Maps three uniforms on [0,1) to a point of domain cell `slot`.
  Vec3 point_in_cell(std::size_t slot, double u, double v, double w) const;
  std::size_t n_steps() const { return n_steps_; }
  const Vec3& box_lo() const { return lo_; }
  const Vec3& box_hi() const { return hi_; }
  std::size_t registrations() const { return entries_.size(); }

 private:
  std::optional<std::size_t> slot_of(const Vec3& p) const;
  bool membership(const Vec3& p, std::size_t seg) const;

  const Path3D* path_;
  Shape shape_;
  std::size_t n_steps_;
  double cell_;
  Vec3 lo_{};
  Vec3 hi_{};
  std::unordered_map<std::uint64_t, std::uint32_t> slots_;
  std::vector<std::uint64_t> cell_keys_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> entries_;
};

// Default sampling key for a path: independent of the path-increment stream.
std::uint64_t default_sample_seed(const Path3D& path);

// Monte Carlo volume of S^K(0, t) = ∪_{s≤t} (B_s + K) for the polyline.
VolumeEstimate tube_volume(const Path3D& path, const Shape& shape, double t,
                           std::size_t n_samples,
                           std::optional<std::uint64_t> sample_seed = std::nullopt);

// Volumes along an increasing time grid with common sample points, so the
// profile is pathwise non-decreasing.
std::vector<VolumeEstimate> sausage_profile(
    const Path3D& path, const Shape& shape, std::span<const double> t_grid,
    std::size_t n_samples, std::optional<std::uint64_t> sample_seed = std::nullopt);

// Volume of S_a^K(0, t_a) ∩ S_b^K(0, t_b). Paths must come from different
// replicas unless `allow_same_replica` is set.
VolumeEstimate sausage_intersection_volume(
    const Path3D& path_a, const Path3D& path_b, const Shape& shape, double t_a,
    double t_b, std::size_t n_samples,
    std::optional<std::uint64_t> sample_seed = std::nullopt,
    bool allow_same_replica = false);

// Checks the step-size contract h <= (r/10)^2 (r = inradius) and t <= t_max.
void check_tube_contract(const Path3D& path, const Shape& shape, double t);

// CSV with header `t,value,std_error,n_samples,clamp_events`.
void write_profile_csv(std::ostream& out, std::span<const double> t_grid,
                       std::span<const VolumeEstimate> profile);

}  // namespace sausage
