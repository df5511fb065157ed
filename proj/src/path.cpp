#include "sausage/path.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>

#include "sausage/errors.hpp"
#include "sausage/rng.hpp"

namespace sausage {

namespace {

constexpr double kGridTol = 1e-9;
constexpr char kMagic[5] = {'W', 'S', 'L', 'B', '1'};

std::size_t whole_steps(double t, double h) {
  const double q = t / h;
  const double r = std::round(q);
  if (std::abs(q - r) <= kGridTol * std::max(1.0, r)) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::floor(q));
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ConfigError("path dump truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

std::size_t grid_points(double t_max, double step_h) { return whole_steps(t_max, step_h) + 1; }

std::size_t Path3D::steps_until(double t) const { return whole_steps(t, step_h); }

void PathConfig::validate() const {
  if (!std::isfinite(step_h) || !std::isfinite(t_max)) throw ConfigError("non-finite path horizon or step");
  if (step_h <= 0.0) throw ConfigError("step_h must be positive");
  if (t_max < step_h) throw ConfigError("t_max must be at least step_h");
}

Path3D gen_path(const PathConfig& cfg) {
  cfg.validate();
  Path3D path;
  path.step_h = cfg.step_h;
  path.t_max = cfg.t_max;
  path.seed_info = {cfg.base_seed, cfg.replica_index};
  const std::size_t n = grid_points(cfg.t_max, cfg.step_h);
  path.points.resize(n);
  CounterRng rng(cfg.base_seed, cfg.replica_index, Stream::PathIncrements);
  const double sd = std::sqrt(cfg.step_h);
  Vec3 pos{};
  path.points[0] = pos;
  for (std::size_t k = 1; k < n; ++k) {
    const double dx = rng.normal();
    const double dy = rng.normal();
    const double dz = rng.normal();
    pos += Vec3{dx, dy, dz} * sd;
    path.points[k] = pos;
  }
  return path;
}

RadialClock radial_clock_ratio(const Path3D& path, double t) {
  if (!(t >= std::numbers::e) || t > path.t_max * (1.0 + kGridTol))
    throw DomainError("radial_clock_ratio: t must lie in [e, t_max]");
  const std::size_t k_end = std::min(path.steps_until(t), path.size() - 1);
  const std::size_t k_begin = static_cast<std::size_t>(std::ceil(1.0 / path.step_h - kGridTol));
  if (k_end <= k_begin) throw DomainError("radial_clock_ratio: fewer than two samples in [1, t]");
  RadialClock out;
  auto inv_r2 = [&](std::size_t k) {
    double r2 = norm2(path.points[k]);
    if (r2 < kRadialFloor * kRadialFloor) {
      r2 = kRadialFloor * kRadialFloor;
      ++out.clamp_events;
    }
    return 1.0 / r2;
  };
  double sum = 0.5 * (inv_r2(k_begin) + inv_r2(k_end));
  for (std::size_t k = k_begin + 1; k < k_end; ++k) sum += inv_r2(k);
  double integral = sum * path.step_h;
  // The grid need not start exactly at s = 1; extend by the partial panel.
  const double lead = path.time_at(k_begin) - 1.0;
  if (lead > 0.0 && k_begin > 0) integral += lead * inv_r2(k_begin);
  out.ratio = integral / std::log(t);
  return out;
}

Path3D rescale_path(const Path3D& path, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("rescale_path: lambda must be positive");
  const double m = lambda >= 1.0 ? lambda : 1.0 / lambda;
  if (std::abs(m - std::round(m)) > 1e-9 * m)
    throw ConfigError("rescale_path: lambda must be an integer m or 1/m");
  Path3D out;
  out.step_h = path.step_h / lambda;
  out.t_max = path.t_max / lambda;
  out.seed_info = path.seed_info;
  const double s = 1.0 / std::sqrt(lambda);
  out.points.reserve(path.size());
  for (const Vec3& p : path.points) out.points.push_back(p * s);
  return out;
}

Path3D subsample_path(const Path3D& path, std::size_t m) {
  if (m == 0) throw ConfigError("subsample_path: factor must be positive");
  Path3D out;
  out.step_h = path.step_h * static_cast<double>(m);
  out.seed_info = path.seed_info;
  for (std::size_t k = 0; k < path.size(); k += m) out.points.push_back(path.points[k]);
  out.t_max = out.time_at(out.size() - 1);
  if (out.size() < 2) throw ConfigError("subsample_path: factor exceeds the path length");
  return out;
}

Path3D refine_path(const Path3D& path, std::uint32_t level) {
  Path3D out;
  out.step_h = path.step_h / 2.0;
  out.t_max = path.t_max;
  out.seed_info = path.seed_info;
  out.points.resize(2 * path.size() - 1);
  CounterRng rng(path.seed_info.base_seed, path.seed_info.replica_index, Stream::BridgeRefine, level);
  const double sd = std::sqrt(path.step_h / 4.0);
  out.points[0] = path.points[0];
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const Vec3& a = path.points[k];
    const Vec3& b = path.points[k + 1];
    const double dx = rng.normal();
    const double dy = rng.normal();
    const double dz = rng.normal();
    out.points[2 * k + 1] = (a + b) * 0.5 + Vec3{dx, dy, dz} * sd;
    out.points[2 * k + 2] = b;
  }
  return out;
}

void write_path_binary(std::ostream& out, const Path3D& path) {
  out.write(kMagic, sizeof kMagic);
  put_f64(out, path.step_h);
  put_f64(out, path.t_max);
  put_u64(out, path.points.size());
  for (const Vec3& p : path.points) {
    put_f64(out, p.x);
    put_f64(out, p.y);
    put_f64(out, p.z);
  }
}

Path3D read_path_binary(std::istream& in) {
  char magic[5];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw ConfigError("path dump: bad magic");
  Path3D path;
  path.step_h = get_f64(in);
  path.t_max = get_f64(in);
  const std::uint64_t n = get_u64(in);
  path.points.resize(n);
  for (auto& p : path.points) {
    p.x = get_f64(in);
    p.y = get_f64(in);
    p.z = get_f64(in);
  }
  return path;
}

}  // namespace sausage
