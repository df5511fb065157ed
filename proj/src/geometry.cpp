#include "sausage/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

#include "sausage/errors.hpp"
#include "sausage/rng.hpp"

namespace sausage {

namespace {

constexpr std::int64_t kKeyBias = std::int64_t{1} << 20;
constexpr std::int64_t kKeySpan = std::int64_t{1} << 21;

std::uint64_t pack_key(std::int64_t ix, std::int64_t iy, std::int64_t iz) {
  ix += kKeyBias;
  iy += kKeyBias;
  iz += kKeyBias;
  if (ix < 0 || iy < 0 || iz < 0 || ix >= kKeySpan || iy >= kKeySpan || iz >= kKeySpan)
    throw DomainError("tube index: path extends beyond the addressable cell range");
  return (static_cast<std::uint64_t>(ix) << 42) | (static_cast<std::uint64_t>(iy) << 21) |
         static_cast<std::uint64_t>(iz);
}

std::array<std::int64_t, 3> unpack_key(std::uint64_t key) {
  const auto mask = static_cast<std::uint64_t>(kKeySpan - 1);
  return {static_cast<std::int64_t>((key >> 42) & mask) - kKeyBias,
          static_cast<std::int64_t>((key >> 21) & mask) - kKeyBias,
          static_cast<std::int64_t>(key & mask) - kKeyBias};
}

Vec3 vmin(const Vec3& a, const Vec3& b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
Vec3 vmax(const Vec3& a, const Vec3& b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

// Intersects the parameter interval [lo, hi] with {λ : |w - λ d| <= e}.
bool clip_axis(double w, double d, double e, double& lo, double& hi) {
  if (d == 0.0) return std::abs(w) <= e;
  double l0 = (w - e) / d;
  double l1 = (w + e) / d;
  if (l0 > l1) std::swap(l0, l1);
  lo = std::max(lo, l0);
  hi = std::min(hi, l1);
  return lo <= hi;
}

void check_grid(std::span<const double> t_grid) {
  if (t_grid.empty()) throw ConfigError("empty time grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] >= 0.0)) throw DomainError("time grid entries must be non-negative");
    if (i > 0 && t_grid[i] < t_grid[i - 1]) throw ConfigError("time grid must be increasing");
  }
}

}  // namespace

Shape Shape::ball(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("ball radius must be positive");
  Shape s;
  s.kind = Kind::Ball;
  s.radius = r;
  return s;
}

Shape Shape::box(const Vec3& e) {
  if (!(e.x > 0.0 && e.y > 0.0 && e.z > 0.0)) throw ConfigError("box half extents must be positive");
  Shape s;
  s.kind = Kind::Box;
  s.half_extents = e;
  return s;
}

double Shape::circumradius() const { return kind == Kind::Ball ? radius : norm(half_extents); }

double Shape::inradius() const {
  return kind == Kind::Ball ? radius
                            : std::min({half_extents.x, half_extents.y, half_extents.z});
}

double Shape::volume() const {
  if (kind == Kind::Ball) return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
  return 8.0 * half_extents.x * half_extents.y * half_extents.z;
}

bool Shape::contains(const Vec3& p) const {
  if (kind == Kind::Ball) return norm2(p) <= radius * radius;
  return std::abs(p.x) <= half_extents.x && std::abs(p.y) <= half_extents.y &&
         std::abs(p.z) <= half_extents.z;
}

bool Shape::segment_hits(const Vec3& p, const Vec3& a, const Vec3& b) const {
  if (kind == Kind::Ball) return segment_dist2(p, a, b) <= radius * radius;
  // p - a - λ(b - a) ∈ box for some λ ∈ [0, 1].
  const Vec3 w = p - a;
  const Vec3 d = b - a;
  double lo = 0.0;
  double hi = 1.0;
  return clip_axis(w.x, d.x, half_extents.x, lo, hi) &&
         clip_axis(w.y, d.y, half_extents.y, lo, hi) &&
         clip_axis(w.z, d.z, half_extents.z, lo, hi);
}

TubeIndex::TubeIndex(const Path3D& path, const Shape& shape, std::size_t n_steps,
                     const TubeIndex* mask)
    : path_(&path), shape_(shape), n_steps_(n_steps), cell_(shape.circumradius()) {
  if (n_steps + 1 > path.size()) throw DomainError("tube index: more steps than the path holds");
  const double reach = cell_;
  const std::size_t n_seg = std::max<std::size_t>(n_steps, 1);

  lo_ = hi_ = path.points[0];
  for (std::size_t k = 1; k <= n_steps; ++k) {
    lo_ = vmin(lo_, path.points[k]);
    hi_ = vmax(hi_, path.points[k]);
  }
  lo_ -= Vec3{reach, reach, reach};
  hi_ += Vec3{reach, reach, reach};

  std::vector<std::uint32_t> pair_slot;
  std::vector<std::uint32_t> pair_seg;
  pair_slot.reserve(n_seg * 8);
  pair_seg.reserve(n_seg * 8);
  std::array<std::int64_t, 6> prev_range{1, 0, 1, 0, 1, 0};
  std::vector<std::uint32_t> range_slots;
  const double inv_cell = 1.0 / cell_;

  for (std::size_t k = 0; k < n_seg; ++k) {
    const Vec3& a = path.points[k];
    const Vec3& b = path.points[std::min(k + 1, n_steps)];
    const Vec3 blo = vmin(a, b) - Vec3{reach, reach, reach};
    const Vec3 bhi = vmax(a, b) + Vec3{reach, reach, reach};
    const std::array<std::int64_t, 6> range{
        static_cast<std::int64_t>(std::floor(blo.x * inv_cell)),
        static_cast<std::int64_t>(std::floor(bhi.x * inv_cell)),
        static_cast<std::int64_t>(std::floor(blo.y * inv_cell)),
        static_cast<std::int64_t>(std::floor(bhi.y * inv_cell)),
        static_cast<std::int64_t>(std::floor(blo.z * inv_cell)),
        static_cast<std::int64_t>(std::floor(bhi.z * inv_cell))};
    if (range != prev_range) {
      range_slots.clear();
      for (std::int64_t ix = range[0]; ix <= range[1]; ++ix)
        for (std::int64_t iy = range[2]; iy <= range[3]; ++iy)
          for (std::int64_t iz = range[4]; iz <= range[5]; ++iz) {
            const std::uint64_t key = pack_key(ix, iy, iz);
            if (mask != nullptr && !mask->slots_.contains(key)) continue;
            auto [it, inserted] =
                slots_.try_emplace(key, static_cast<std::uint32_t>(cell_keys_.size()));
            if (inserted) cell_keys_.push_back(key);
            range_slots.push_back(it->second);
          }
      prev_range = range;
    }
    for (std::uint32_t s : range_slots) {
      pair_slot.push_back(s);
      pair_seg.push_back(static_cast<std::uint32_t>(k));
    }
  }

  // Counting sort by slot; stable, so per-cell lists stay in segment order.
  offsets_.assign(cell_keys_.size() + 1, 0);
  for (std::uint32_t s : pair_slot) ++offsets_[s + 1];
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
  entries_.resize(pair_slot.size());
  std::vector<std::uint32_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t i = 0; i < pair_slot.size(); ++i) entries_[cursor[pair_slot[i]]++] = pair_seg[i];
}

std::optional<std::size_t> TubeIndex::slot_of(const Vec3& p) const {
  const double inv_cell = 1.0 / cell_;
  const auto ix = static_cast<std::int64_t>(std::floor(p.x * inv_cell));
  const auto iy = static_cast<std::int64_t>(std::floor(p.y * inv_cell));
  const auto iz = static_cast<std::int64_t>(std::floor(p.z * inv_cell));
  if (std::abs(ix) >= kKeyBias || std::abs(iy) >= kKeyBias || std::abs(iz) >= kKeyBias)
    return std::nullopt;
  auto it = slots_.find(pack_key(ix, iy, iz));
  if (it == slots_.end()) return std::nullopt;
  return it->second;
}

bool TubeIndex::membership(const Vec3& p, std::size_t seg) const {
  const Vec3& a = path_->points[seg];
  const Vec3& b = path_->points[std::min(seg + 1, n_steps_)];
  return shape_.segment_hits(p, a, b);
}

std::optional<TubeIndex::Hit> TubeIndex::first_hit(const Vec3& p) const {
  const auto slot = slot_of(p);
  if (!slot) return std::nullopt;
  for (std::uint32_t i = offsets_[*slot]; i < offsets_[*slot + 1]; ++i) {
    const std::size_t seg = entries_[i];
    if (membership(p, seg)) return Hit{seg, shape_.contains(p - path_->points[seg])};
  }
  return std::nullopt;
}

bool TubeIndex::contains(const Vec3& p, std::size_t steps) const {
  const auto hit = first_hit(p);
  if (!hit) return false;
  if (steps == 0) return hit->segment == 0 && hit->start_point;
  return hit->segment < steps;
}

double TubeIndex::domain_volume() const {
  return static_cast<double>(cell_keys_.size()) * cell_ * cell_ * cell_;
}

Vec3 TubeIndex::point_in_cell(std::size_t slot, double u, double v, double w) const {
  const auto c = unpack_key(cell_keys_[slot]);
  return {(static_cast<double>(c[0]) + u) * cell_, (static_cast<double>(c[1]) + v) * cell_,
          (static_cast<double>(c[2]) + w) * cell_};
}

std::uint64_t default_sample_seed(const Path3D& path) {
  return mix64(path.seed_info.base_seed ^ 0x5u);
}

void check_tube_contract(const Path3D& path, const Shape& shape, double t) {
  if (!(t >= 0.0) || t > path.t_max * (1.0 + 1e-12)) throw DomainError("time outside [0, t_max]");
  const double r = shape.inradius();
  if (path.step_h > (r / 10.0) * (r / 10.0) * (1.0 + 1e-12))
    throw AccuracyError("step size violates h <= (r/10)^2 for this shape");
}

std::vector<VolumeEstimate> sausage_profile(const Path3D& path, const Shape& shape,
                                            std::span<const double> t_grid,
                                            std::size_t n_samples,
                                            std::optional<std::uint64_t> sample_seed) {
  check_grid(t_grid);
  check_tube_contract(path, shape, t_grid.back());
  if (n_samples < 1000) throw ConfigError("n_samples must be at least 1000");

  std::vector<std::size_t> steps(t_grid.size());
  for (std::size_t j = 0; j < t_grid.size(); ++j)
    steps[j] = std::min(path.steps_until(t_grid[j]), path.size() - 1);

  const TubeIndex index(path, shape, steps.back());
  CounterRng rng(sample_seed.value_or(default_sample_seed(path)), path.seed_info.replica_index,
                 Stream::VolumeSamples);

  // first_in[j]: number of sample points whose earliest grid entry is j.
  std::vector<std::size_t> first_in(t_grid.size() + 1, 0);
  const std::size_t n_cells = index.cell_count();
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t slot = rng.below(n_cells);
    const double u = rng.uniform();
    const double v = rng.uniform();
    const double w = rng.uniform();
    const auto hit = index.first_hit(index.point_in_cell(slot, u, v, w));
    if (!hit) continue;
    std::size_t j = 0;
    while (j < steps.size()) {
      const bool inside = steps[j] == 0 ? (hit->segment == 0 && hit->start_point)
                                        : hit->segment < steps[j];
      if (inside) break;
      ++j;
    }
    ++first_in[j];
  }

  const double dom = index.domain_volume();
  const double n = static_cast<double>(n_samples);
  std::vector<VolumeEstimate> out(t_grid.size());
  std::size_t hits = 0;
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    hits += first_in[j];
    const double p = static_cast<double>(hits) / n;
    VolumeEstimate& e = out[j];
    e.value = dom * p;
    e.std_error = dom * std::sqrt(p * (1.0 - p) / (n - 1.0));
    e.n_samples = n_samples;
    e.box_lo = index.box_lo();
    e.box_hi = index.box_hi();
  }
  return out;
}

VolumeEstimate tube_volume(const Path3D& path, const Shape& shape, double t,
                           std::size_t n_samples, std::optional<std::uint64_t> sample_seed) {
  const double grid[1] = {t};
  return sausage_profile(path, shape, grid, n_samples, sample_seed).front();
}

VolumeEstimate sausage_intersection_volume(const Path3D& path_a, const Path3D& path_b,
                                           const Shape& shape, double t_a, double t_b,
                                           std::size_t n_samples,
                                           std::optional<std::uint64_t> sample_seed,
                                           bool allow_same_replica) {
  if (!allow_same_replica && path_a.seed_info == path_b.seed_info)
    throw MisuseError("intersection volume needs independent paths (distinct seed info)");
  check_tube_contract(path_a, shape, t_a);
  check_tube_contract(path_b, shape, t_b);
  if (n_samples < 1000) throw ConfigError("n_samples must be at least 1000");

  const std::size_t ka = std::min(path_a.steps_until(t_a), path_a.size() - 1);
  const std::size_t kb = std::min(path_b.steps_until(t_b), path_b.size() - 1);
  const TubeIndex index_a(path_a, shape, ka);
  const TubeIndex index_b(path_b, shape, kb, &index_a);

  CounterRng rng(sample_seed.value_or(default_sample_seed(path_a)),
                 path_a.seed_info.replica_index, Stream::VolumeSamples, 1);
  std::size_t hits = 0;
  const std::size_t n_cells = index_a.cell_count();
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t slot = rng.below(n_cells);
    const double u = rng.uniform();
    const double v = rng.uniform();
    const double w = rng.uniform();
    const Vec3 p = index_a.point_in_cell(slot, u, v, w);
    if (index_a.contains(p, ka) && index_b.cell_count() > 0 && index_b.contains(p, kb)) ++hits;
  }
  const double n = static_cast<double>(n_samples);
  const double p = static_cast<double>(hits) / n;
  const double dom = index_a.domain_volume();
  VolumeEstimate e;
  e.value = dom * p;
  e.std_error = dom * std::sqrt(p * (1.0 - p) / (n - 1.0));
  e.n_samples = n_samples;
  e.box_lo = index_a.box_lo();
  e.box_hi = index_a.box_hi();
  return e;
}

void write_profile_csv(std::ostream& out, std::span<const double> t_grid,
                       std::span<const VolumeEstimate> profile) {
  if (t_grid.size() != profile.size()) throw ConfigError("profile and grid lengths differ");
  out << "t,value,std_error,n_samples,clamp_events\n";
  const auto old = out.precision(17);
  for (std::size_t j = 0; j < profile.size(); ++j)
    out << t_grid[j] << ',' << profile[j].value << ',' << profile[j].std_error << ','
        << profile[j].n_samples << ',' << profile[j].clamp_events << '\n';
  out.precision(old);
}

}  // namespace sausage
