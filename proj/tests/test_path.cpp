#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "sausage/errors.hpp"
#include "sausage/path.hpp"
#include "sausage/stats.hpp"

using namespace sausage;

namespace {

PathConfig config(std::uint32_t replica, double t_max, double h, std::uint64_t seed = 11) {
  PathConfig c;
  c.base_seed = seed;
  c.replica_index = replica;
  c.t_max = t_max;
  c.step_h = h;
  return c;
}

Path3D line_path(double t_max, double h) {
  Path3D p;
  p.step_h = h;
  p.t_max = t_max;
  for (std::size_t k = 0; k < grid_points(t_max, h); ++k) p.points.push_back({p.time_at(k), 0.0, 0.0});
  return p;
}

}  // namespace

TEST_CASE("gen_path length, origin and determinism") {
  const Path3D p = gen_path(config(0, 1.0, 1.0));
  CHECK(p.size() == 2);
  CHECK(p.points[0] == Vec3{0, 0, 0});
  const Path3D a = gen_path(config(3, 10.0, 0.01)), b = gen_path(config(3, 10.0, 0.01));
  CHECK(a.size() == 1001);
  CHECK(a.points == b.points);
  CHECK(a.seed_info == SeedInfo{11, 3});
  CHECK(gen_path(config(4, 10.0, 0.01)).points != a.points);
}

TEST_CASE("gen_path rejects bad configs") {
  CHECK_THROWS_AS(gen_path(config(0, 1.0, 0.0)), ConfigError);
  CHECK_THROWS_AS(gen_path(config(0, 1.0, -0.1)), ConfigError);
  CHECK_THROWS_AS(gen_path(config(0, 0.5, 1.0)), ConfigError);
}

TEST_CASE("endpoint second moment is 3t") {
  const int n = 10000;
  std::vector<double> r2(n);
  for (int i = 0; i < n; ++i) {
    const Path3D p = gen_path(config(static_cast<std::uint32_t>(i), 4.0, 0.25));
    r2[i] = norm2(p.points.back());
  }
  CHECK(std::abs(mean(r2) - 12.0) <= 3.0 * std_error_of_mean(r2));
}

TEST_CASE("increments are Gaussian and uncorrelated") {
  const double h = 0.01;
  const Path3D p = gen_path(config(0, 1000.0, h));
  std::vector<double> dx;
  for (std::size_t k = 1; k < p.size(); ++k) dx.push_back(p.points[k].x - p.points[k - 1].x);
  const std::size_t n = dx.size();
  double c = 0.0, v = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) c += dx[k] * dx[k + 1];
  for (double d : dx) v += d * d;
  CHECK(std::abs(c / v) < 4.0 / std::sqrt(static_cast<double>(n)));
  const double s = std::sqrt(h);
  const double d = ks_statistic(dx, [&](double x) { return normal_cdf(x / s); });
  CHECK(ks_pvalue(n, d) >= 0.01);
}

TEST_CASE("radial clock on the line path") {
  const Path3D line = line_path(10.0, 0.001);
  const double t = std::exp(2.0);
  const RadialClock rc = radial_clock_ratio(line, t);
  CHECK(rc.ratio == doctest::Approx((1.0 - 1.0 / t) / 2.0).epsilon(1e-3));
  CHECK(rc.ratio == doctest::Approx(0.4323).epsilon(1e-3));
  CHECK(rc.clamp_events == 0);
  CHECK_THROWS_AS(radial_clock_ratio(line, line.t_max + 1.0), DomainError);
  CHECK_THROWS_AS(radial_clock_ratio(line, 2.0), DomainError);
}

TEST_CASE("radial clock over Brownian replicas") {
  std::vector<double> ratios;
  for (std::uint32_t i = 0; i < 200; ++i)
    ratios.push_back(radial_clock_ratio(gen_path(config(i, 1000.0, 0.05)), 1000.0).ratio);
  const double m = mean(ratios);
  CHECK(m >= 0.85);
  CHECK(m <= 1.15);
}

TEST_CASE("rescale_path") {
  const Path3D p = gen_path(config(1, 8.0, 0.5));
  CHECK(rescale_path(p, 1.0).points == p.points);
  Path3D q = line_path(8.0, 0.5);
  q.points[8] = {2.0, 0.0, 0.0};  // time 4
  const Path3D r = rescale_path(q, 4.0);
  CHECK(r.step_h == doctest::Approx(0.125));
  CHECK(r.t_max == doctest::Approx(2.0));
  CHECK(r.points[8].x == doctest::Approx(1.0));  // time 1
  const Path3D s = rescale_path(p, 0.5);
  CHECK(s.step_h == doctest::Approx(1.0));
  CHECK(s.points[1].x == doctest::Approx(p.points[1].x * std::sqrt(2.0)));
  CHECK_THROWS_AS(rescale_path(p, 1.5), ConfigError);
  CHECK_THROWS_AS(rescale_path(p, 0.0), ConfigError);
}

TEST_CASE("subsample and refine") {
  const Path3D p = gen_path(config(2, 10.0, 0.01));
  const Path3D s = subsample_path(p, 10);
  CHECK(s.size() == 101);
  CHECK(s.step_h == doctest::Approx(0.1));
  CHECK(s.points[7] == p.points[70]);
  const Path3D r = refine_path(p);
  CHECK(r.size() == 2 * p.size() - 1);
  CHECK(r.step_h == doctest::Approx(0.005));
  CHECK(r.points[40] == p.points[20]);
  CHECK(refine_path(p).points == r.points);
  // Bridge midpoints: per-coordinate variance h/4 around the chord midpoint.
  std::vector<double> dev;
  for (std::size_t k = 0; k + 1 < p.size(); ++k)
    dev.push_back(r.points[2 * k + 1].x - 0.5 * (p.points[k].x + p.points[k + 1].x));
  CHECK(variance(dev) == doctest::Approx(0.0025).epsilon(0.1));
}

TEST_CASE("binary dump round trip") {
  const Path3D p = gen_path(config(5, 2.0, 0.1));
  std::stringstream buf;
  write_path_binary(buf, p);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 5) == "WSLB1");
  CHECK(bytes.size() == 5 + 8 + 8 + 8 + p.size() * 24);
  const Path3D q = read_path_binary(buf);
  CHECK(q.points == p.points);
  CHECK(q.step_h == p.step_h);
  CHECK(q.t_max == p.t_max);
  std::stringstream bad("XXXXXsomething");
  CHECK_THROWS_AS(read_path_binary(bad), ConfigError);
}
