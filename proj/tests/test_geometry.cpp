#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "sausage/errors.hpp"
#include "sausage/geometry.hpp"
#include "sausage/path.hpp"
#include "sausage/rng.hpp"
#include "sausage/stats.hpp"

using namespace sausage;

namespace {

constexpr double kPi = std::numbers::pi;

Path3D polyline(std::vector<Vec3> pts, double h, std::uint32_t replica = 0) {
  Path3D p;
  p.step_h = h;
  p.points = std::move(pts);
  p.t_max = h * static_cast<double>(p.points.size() - 1);
  p.seed_info = {99, replica};
  return p;
}

Path3D brownian(std::uint32_t replica, double t_max, double h) {
  PathConfig c;
  c.base_seed = 21;
  c.replica_index = replica;
  c.t_max = t_max;
  c.step_h = h;
  return gen_path(c);
}

// Voxel count of the tube around a polyline (cell centres, edge `cell`).
double voxel_volume(const Path3D& p, double r, double cell) {
  Vec3 lo = p.points[0], hi = p.points[0];
  for (const Vec3& q : p.points) {
    lo = {std::min(lo.x, q.x), std::min(lo.y, q.y), std::min(lo.z, q.z)};
    hi = {std::max(hi.x, q.x), std::max(hi.y, q.y), std::max(hi.z, q.z)};
  }
  lo -= Vec3{r, r, r};
  hi += Vec3{r, r, r};
  const auto nx = static_cast<long>(std::ceil((hi.x - lo.x) / cell));
  const auto ny = static_cast<long>(std::ceil((hi.y - lo.y) / cell));
  const auto nz = static_cast<long>(std::ceil((hi.z - lo.z) / cell));
  long count = 0;
  for (long i = 0; i < nx; ++i)
    for (long j = 0; j < ny; ++j)
      for (long k = 0; k < nz; ++k) {
        const Vec3 c{lo.x + (i + 0.5) * cell, lo.y + (j + 0.5) * cell, lo.z + (k + 0.5) * cell};
        for (std::size_t s = 0; s + 1 < p.size(); ++s)
          if (segment_dist2(c, p.points[s], p.points[s + 1]) <= r * r) {
            ++count;
            break;
          }
      }
  return static_cast<double>(count) * cell * cell * cell;
}

}  // namespace

TEST_CASE("shape basics") {
  const Shape b = Shape::ball(2.0);
  CHECK(b.volume() == doctest::Approx(4.0 / 3.0 * kPi * 8.0));
  CHECK(b.circumradius() == 2.0);
  CHECK(b.inradius() == 2.0);
  const Shape x = Shape::box({1.0, 2.0, 3.0});
  CHECK(x.volume() == doctest::Approx(48.0));
  CHECK(x.inradius() == 1.0);
  CHECK(x.circumradius() == doctest::Approx(std::sqrt(14.0)));
  CHECK(x.contains({0.9, -1.9, 2.9}));
  CHECK_FALSE(x.contains({1.1, 0, 0}));
  CHECK(x.segment_hits({0, 3.5, 0}, {0, 0, 0}, {0, 2, 0}));
  CHECK_FALSE(x.segment_hits({0, 4.5, 0}, {0, 0, 0}, {0, 2, 0}));
  CHECK_THROWS_AS(Shape::ball(0.0), ConfigError);
  CHECK_THROWS_AS(Shape::box({1, 0, 1}), ConfigError);
}

TEST_CASE("point sausage is the shape itself") {
  const Path3D p = polyline(std::vector<Vec3>(11, Vec3{}), 0.01);
  const VolumeEstimate v = tube_volume(p, Shape::ball(1.0), 0.1, 50000);
  CHECK(std::abs(v.value - 4.18879) <= 3 * v.std_error + 1e-9);
  CHECK(v.value <= v.box_volume());
  const auto prof = sausage_profile(p, Shape::ball(1.0), std::vector<double>{0.0}, 50000);
  CHECK(std::abs(prof[0].value - 4.18879) <= 3 * prof[0].std_error + 1e-9);
}

TEST_CASE("straight line tube: cylinder plus caps") {
  std::vector<Vec3> pts;
  for (int k = 0; k <= 400; ++k) pts.push_back({0.025 * k, 0.0, 0.0});
  const Path3D p = polyline(pts, 0.0025);
  const VolumeEstimate v = tube_volume(p, Shape::ball(0.5), p.t_max, 100000);
  CHECK(std::abs(v.value - 8.37758) <= 3 * v.std_error);
}

TEST_CASE("oracle equivalence against a voxel count on short polylines") {
  CounterRng rng(5, 0, Stream::Synthetic);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<Vec3> pts{{0, 0, 0}};
    for (int s = 0; s < 4; ++s) pts.push_back(pts.back() + Vec3{rng.normal(), rng.normal(), rng.normal()} * 0.1);
    const Path3D p = polyline(pts, 0.01);
    const double r = 1.0;
    const double vox = voxel_volume(p, r, r / 64.0);
    const VolumeEstimate v = tube_volume(p, Shape::ball(r), p.t_max, 200000);
    CHECK(std::abs(v.value - vox) <= std::max(3 * v.std_error, 0.01 * vox));
  }
}

TEST_CASE("tube contract and domain errors") {
  const Path3D p = brownian(0, 10.0, 0.02);
  CHECK_THROWS_AS(tube_volume(p, Shape::ball(1.0), 5.0, 5000), AccuracyError);
  CHECK_THROWS_AS(tube_volume(p, Shape::ball(2.0), 11.0, 5000), DomainError);
  CHECK_THROWS_AS(tube_volume(p, Shape::ball(2.0), 5.0, 10), ConfigError);
  CHECK_NOTHROW(check_tube_contract(p, Shape::ball(2.0), 10.0));
}

TEST_CASE("profile: equal times, monotone, deterministic, union bound") {
  const Path3D p = brownian(1, 40.0, 0.01);
  const Shape b = Shape::ball(1.0);
  const auto same = sausage_profile(p, b, std::vector<double>{5.0, 5.0}, 20000);
  CHECK(same[0].value == same[1].value);
  const std::vector<double> grid{10.0, 20.0, 40.0};
  const auto prof = sausage_profile(p, b, grid, 20000);
  CHECK(prof[0].value <= prof[1].value);
  CHECK(prof[1].value <= prof[2].value);
  const auto again = sausage_profile(p, b, grid, 20000);
  for (int i = 0; i < 3; ++i) CHECK(again[i].value == prof[i].value);
  // A single time samples its own domain, so agreement is statistical.
  const auto single = tube_volume(p, b, 20.0, 20000);
  CHECK(std::abs(single.value - prof[1].value) <= 4 * std::hypot(single.std_error, prof[1].std_error));
  // Each step lies in a capsule of volume π r² |Δ| + (4/3)π r³.
  double bound = 0.0;
  for (std::size_t k = 0; k + 1 < p.steps_until(40.0) + 1; ++k)
    bound += kPi * norm(p.points[k + 1] - p.points[k]) + 4.0 / 3.0 * kPi;
  CHECK(prof[2].value <= bound);
  CHECK(prof[2].value >= 0.0);
}

TEST_CASE("profile CSV header") {
  const Path3D p = polyline(std::vector<Vec3>(3, Vec3{}), 0.01);
  const std::vector<double> grid{0.0, 0.02};
  const auto prof = sausage_profile(p, Shape::ball(1.0), grid, 1000);
  std::ostringstream out;
  write_profile_csv(out, grid, prof);
  CHECK(out.str().rfind("t,value,std_error,n_samples,clamp_events\n", 0) == 0);
}

TEST_CASE("intersection volume") {
  const Path3D a = brownian(2, 10.0, 0.01);
  Path3D far = polyline(std::vector<Vec3>(11, Vec3{1000, 0, 0}), 0.01, 7);
  const Shape b = Shape::ball(1.0);
  CHECK(sausage_intersection_volume(a, far, b, 10.0, 0.1, 5000).value == 0.0);
  CHECK_THROWS_AS(sausage_intersection_volume(a, a, b, 10.0, 10.0, 5000), MisuseError);
  const auto self = sausage_intersection_volume(a, a, b, 10.0, 10.0, 50000, 123, true);
  const auto vol = tube_volume(a, b, 10.0, 50000, 123);
  CHECK(std::abs(self.value - vol.value) <= 3 * std::hypot(self.std_error, vol.std_error));
}

TEST_CASE("scaling of the sausage volume in distribution") {
  const int n = 300;
  const double t = 4.0;
  std::vector<double> direct(n), scaled(n);
  for (int i = 0; i < n; ++i) {
    const Path3D p = brownian(static_cast<std::uint32_t>(i), t, 0.01);
    direct[i] = tube_volume(p, Shape::ball(1.0), t, 5000).value;
    // Same step-to-radius ratio on both sides: √0.01/1 = √(0.01/4)/0.5.
    const Path3D q = rescale_path(brownian(static_cast<std::uint32_t>(i + 10000), t, 0.01), 4.0);
    scaled[i] = std::pow(t, 1.5) * tube_volume(q, Shape::ball(0.5), 1.0, 5000).value;
  }
  CHECK(ks_two_sample(direct, scaled).p_value >= 0.01);
}
