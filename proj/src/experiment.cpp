#include "sausage/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"
#include "sausage/capacity.hpp"
#include "sausage/geometry.hpp"
#include "sausage/ilt.hpp"
#include "sausage/parallel.hpp"
#include "sausage/path.hpp"
#include "sausage/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace sausage {

namespace {

constexpr std::uint32_t kPartnerOffset = 0x80000000u;

const std::map<std::string, Experiment>& experiment_names() {
  static const std::map<std::string, Experiment> names{
      {"capacity", Experiment::Capacity},
      {"mean_expansion", Experiment::MeanExpansion},
      {"clt", Experiment::Clt},
      {"strong_approx", Experiment::StrongApprox},
      {"clock", Experiment::Clock},
      {"lil", Experiment::Lil},
      {"asclt", Experiment::Asclt},
      {"intersection_growth", Experiment::IntersectionGrowth},
      {"scaling", Experiment::Scaling},
  };
  return names;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "experiment",          "shape",
      "ball_radius_meters",  "box_half_extents_meters",
      "capacity_meters",     "base_seed",
      "replicas",            "t_grid_seconds",
      "step_h_seconds",      "inner_step_H_seconds",
      "ilt_outer_step_seconds", "denom_floor_meters",
      "n_samples_volume",    "output_dir",
      "centering",           "launch_radius_meters",
      "n_trials",            "horizon_seconds",
      "min_step_seconds",    "halving_study",
      "coupled_ball_radius_meters", "mollifier_rho_meters",
      "horizon_factor",      "sensitivity_factor",
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  std::size_t line = 0;
};

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& k) const { return kv_.count(k) != 0; }
  std::size_t line(const std::string& k) const { return has(k) ? kv_.at(k).line : 0; }

  [[noreturn]] void fail(const std::string& k, const std::string& msg) const {
    throw ConfigLineError(line(k), k + ": " + msg);
  }

  double real(const std::string& k, double def) const {
    if (!has(k)) return def;
    return parse_real(k, kv_.at(k).value);
  }
  std::optional<double> opt_real(const std::string& k) const {
    if (!has(k)) return std::nullopt;
    return parse_real(k, kv_.at(k).value);
  }
  std::uint64_t integer(const std::string& k, std::uint64_t def) const {
    if (!has(k)) return def;
    const std::string& v = kv_.at(k).value;
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) fail(k, "expected a non-negative integer, got '" + v + "'");
    return out;
  }
  std::string text(const std::string& k, const std::string& def) const {
    return has(k) ? kv_.at(k).value : def;
  }
  bool boolean(const std::string& k, bool def) const {
    if (!has(k)) return def;
    const std::string& v = kv_.at(k).value;
    if (v == "true") return true;
    if (v == "false") return false;
    fail(k, "expected true or false, got '" + v + "'");
  }
  std::vector<double> list(const std::string& k) const {
    if (!has(k)) return {};
    const std::string& v = kv_.at(k).value;
    std::vector<double> out;
    if (v.rfind("geometric", 0) == 0) {
      std::istringstream s(v.substr(9));
      double a = 0, b = 0;
      std::size_t n = 0;
      if (!(s >> a >> b >> n) || !(a > 0) || !(b > a) || n < 2)
        fail(k, "expected 'geometric <first> <last> <count>'");
      for (std::size_t i = 0; i < n; ++i) {
        const double x = a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(n - 1));
        out.push_back(i + 1 == n ? b : std::round(x * 1e6) / 1e6);
      }
      return out;
    }
    std::stringstream s(v);
    std::string item;
    while (std::getline(s, item, ',')) out.push_back(parse_real(k, trim(item)));
    return out;
  }

 private:
  double parse_real(const std::string& k, const std::string& v) const {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
      fail(k, "expected a finite number, got '" + v + "'");
    return out;
  }

  std::map<std::string, Entry> kv_;
};

bool uses_volume(Experiment e) {
  return e != Experiment::Capacity && e != Experiment::Clock;
}

bool uses_ilt(Experiment e) { return e == Experiment::StrongApprox || e == Experiment::Clock; }

bool needs_capacity(Experiment e) {
  return e == Experiment::MeanExpansion || e == Experiment::Clt || e == Experiment::StrongApprox ||
         e == Experiment::Lil || e == Experiment::Asclt;
}

bool is_multiple(double big, double small) {
  const double r = big / small;
  return r >= 1.0 - 1e-12 && std::abs(r - std::round(r)) <= 1e-9 * r;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

}  // namespace

const char* experiment_name(Experiment e) {
  for (const auto& [name, value] : experiment_names())
    if (value == e) return name.c_str();
  return "unknown";
}

ExperimentConfig parse_config(std::istream& in) {
  std::map<std::string, Entry> kv;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigLineError(lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known_keys().count(key)) throw ConfigLineError(lineno, "unknown key '" + key + "'");
    if (value.empty()) throw ConfigLineError(lineno, key + ": empty value");
    if (kv.count(key)) throw ConfigLineError(lineno, "duplicate key '" + key + "'");
    kv[key] = {value, lineno};
  }

  ExperimentConfig cfg;
  for (const auto& [k, e] : kv) cfg.canonical += k + " = " + e.value + "\n";
  const Reader r(kv);

  if (!r.has("experiment")) throw ConfigLineError(0, "missing required key 'experiment'");
  const std::string ename = r.text("experiment", "");
  if (!experiment_names().count(ename)) r.fail("experiment", "unknown experiment '" + ename + "'");
  cfg.experiment = experiment_names().at(ename);
  const Experiment ex = cfg.experiment;

  const std::string shape = r.text("shape", "ball");
  if (shape == "ball") {
    const double radius = r.real("ball_radius_meters", 1.0);
    if (!(radius > 0)) r.fail("ball_radius_meters", "must be positive");
    cfg.shape = Shape::ball(radius);
  } else if (shape == "box") {
    const auto e = r.list("box_half_extents_meters");
    if (e.size() != 3 || !(e[0] > 0 && e[1] > 0 && e[2] > 0))
      r.fail(r.has("box_half_extents_meters") ? "box_half_extents_meters" : "shape",
             "a box needs three positive half extents");
    cfg.shape = Shape::box({e[0], e[1], e[2]});
  } else {
    r.fail("shape", "expected ball or box");
  }
  if (const auto c = r.opt_real("capacity_meters")) {
    if (!(*c > 0)) r.fail("capacity_meters", "must be positive");
    cfg.shape.capacity_hint = *c;
  }
  if (needs_capacity(ex) && cfg.shape.kind == Shape::Kind::Box && !cfg.shape.capacity_hint)
    r.fail("shape", "box shapes need capacity_meters for this experiment");

  cfg.base_seed = r.integer("base_seed", 1);
  const std::uint64_t replicas = r.integer("replicas", 1);
  if (replicas < 1 || replicas >= kPartnerOffset) r.fail("replicas", "must be in [1, 2^31)");
  cfg.replicas = static_cast<std::uint32_t>(replicas);
  cfg.t_grid = r.list("t_grid_seconds");
  cfg.step_h = r.real("step_h_seconds", 0.01);
  cfg.inner_step_H = r.real("inner_step_H_seconds", 0.5);
  cfg.ilt_outer_step = r.real("ilt_outer_step_seconds", std::max(0.05, cfg.step_h));
  cfg.denom_floor = r.real("denom_floor_meters", 1e-3);
  cfg.n_samples_volume = r.integer("n_samples_volume", 20000);
  cfg.output_dir = r.text("output_dir", "out");
  const std::string centering = r.text("centering", "empirical");
  if (centering == "empirical") cfg.centering = Centering::EmpiricalMean;
  else if (centering == "theoretical") cfg.centering = Centering::TheoreticalMean;
  else r.fail("centering", "expected empirical or theoretical");
  cfg.launch_radius = r.real("launch_radius_meters", 20.0 * cfg.shape.circumradius());
  cfg.n_trials = r.integer("n_trials", 10000);
  cfg.horizon = r.real("horizon_seconds", 1e6);
  cfg.min_step = r.real("min_step_seconds", 1e-4);
  cfg.halving_study = r.boolean("halving_study", false);
  cfg.coupled_ball_radius = r.opt_real("coupled_ball_radius_meters");
  cfg.mollifier_rho = r.opt_real("mollifier_rho_meters");
  cfg.horizon_factor = r.real("horizon_factor", 50.0);
  cfg.sensitivity_factor = r.real("sensitivity_factor", 25.0);

  // Grid.
  const std::string grid_key = "t_grid_seconds";
  if (ex != Experiment::Capacity) {
    if (cfg.t_grid.empty()) r.fail(r.has(grid_key) ? grid_key : "experiment", "t_grid_seconds is required");
    for (std::size_t i = 0; i < cfg.t_grid.size(); ++i) {
      if (!(cfg.t_grid[i] > 0)) r.fail(grid_key, "times must be positive");
      if (i > 0 && !(cfg.t_grid[i] > cfg.t_grid[i - 1])) r.fail(grid_key, "times must be strictly increasing");
    }
  }

  // Step contracts.
  if (!(cfg.step_h > 0)) r.fail("step_h_seconds", "must be positive");
  if (ex != Experiment::Capacity && cfg.step_h > cfg.t_grid.front())
    r.fail("step_h_seconds", "must not exceed the first grid time");
  if (uses_volume(ex)) {
    const double rin = cfg.shape.inradius();
    if (cfg.step_h > (rin / 10.0) * (rin / 10.0) * (1.0 + 1e-12))
      r.fail("step_h_seconds", "violates the tube step contract h <= (r/10)^2 = " + fmt((rin / 10) * (rin / 10)));
    if (cfg.n_samples_volume < 1000) r.fail("n_samples_volume", "must be at least 1000");
  }
  if (cfg.coupled_ball_radius) {
    const double rc = *cfg.coupled_ball_radius;
    if (!(rc > 0)) r.fail("coupled_ball_radius_meters", "must be positive");
    if (cfg.step_h > (rc / 10.0) * (rc / 10.0) * (1.0 + 1e-12))
      r.fail("coupled_ball_radius_meters", "violates the tube step contract for the coupled ball");
  }
  if (uses_ilt(ex)) {
    if (!is_multiple(cfg.ilt_outer_step, cfg.step_h))
      r.fail(r.has("ilt_outer_step_seconds") ? "ilt_outer_step_seconds" : "step_h_seconds",
             "ilt_outer_step_seconds must be an integer multiple of step_h_seconds");
    if (!is_multiple(cfg.inner_step_H, cfg.ilt_outer_step))
      r.fail(r.has("inner_step_H_seconds") ? "inner_step_H_seconds" : "ilt_outer_step_seconds",
             "inner_step_H_seconds must be an integer multiple of the ILT outer step");
    if (!(cfg.denom_floor > 0 && cfg.denom_floor <= 1e-2)) r.fail("denom_floor_meters", "must lie in (0, 0.01]");
    if (cfg.t_grid.front() < 2.0) r.fail(grid_key, "intersection local times need t >= 2");
    if (!is_multiple(cfg.t_grid.front(), cfg.ilt_outer_step))
      r.fail(grid_key, "grid times must lie on the ILT outer grid");
    for (double t : cfg.t_grid)
      if (std::abs(t / cfg.ilt_outer_step - std::round(t / cfg.ilt_outer_step)) > 1e-9 * t / cfg.ilt_outer_step)
        r.fail(grid_key, "grid times must lie on the ILT outer grid");
  }
  if (cfg.mollifier_rho && !(*cfg.mollifier_rho > 0)) r.fail("mollifier_rho_meters", "must be positive");

  switch (ex) {
    case Experiment::Capacity:
      if (cfg.shape.circumradius() > cfg.launch_radius / 5.0)
        r.fail(r.has("launch_radius_meters") ? "launch_radius_meters" : "shape",
               "shape must fit inside launch_radius/5");
      if (cfg.n_trials == 0) r.fail("n_trials", "must be positive");
      if (!(cfg.horizon > 0)) r.fail("horizon_seconds", "must be positive");
      if (!(cfg.min_step > 0)) r.fail("min_step_seconds", "must be positive");
      break;
    case Experiment::MeanExpansion:
      if (cfg.t_grid.size() < 3) r.fail(grid_key, "the mean-expansion fit needs at least 3 times");
      if (cfg.replicas < 2) r.fail("replicas", "needs at least 2 replicas");
      break;
    case Experiment::Clt:
      if (cfg.replicas < 300) r.fail("replicas", "the CLT report needs at least 300 replicas");
      if (cfg.t_grid.back() < 1000) r.fail(grid_key, "the CLT report needs a time >= 1000");
      if (cfg.t_grid.front() < 100) r.fail(grid_key, "centering needs t >= 100");
      break;
    case Experiment::StrongApprox:
      if (cfg.replicas < 100) r.fail("replicas", "the residual report needs at least 100 replicas");
      if (cfg.t_grid.size() < 2 || cfg.t_grid.back() < 8.0 * cfg.t_grid.front())
        r.fail(grid_key, "the residual report needs a grid spanning a factor 8");
      if (cfg.t_grid.front() < 100) r.fail(grid_key, "centering needs t >= 100");
      break;
    case Experiment::Clock:
      if (cfg.replicas < 2) r.fail("replicas", "needs at least 2 replicas");
      break;
    case Experiment::Lil:
    case Experiment::Asclt:
      if (cfg.t_grid.size() < 50) r.fail(grid_key, "needs at least 50 checkpoints");
      if (cfg.t_grid.back() < 1e4) r.fail(grid_key, "needs t_max >= 10000");
      break;
    case Experiment::IntersectionGrowth:
      if (cfg.replicas < 2) r.fail("replicas", "needs at least 2 replicas");
      if (!(cfg.horizon_factor >= 1.0)) r.fail("horizon_factor", "must be >= 1");
      if (!(cfg.sensitivity_factor >= 1.0)) r.fail("sensitivity_factor", "must be >= 1");
      if (cfg.shape.kind != Shape::Kind::Ball) r.fail("shape", "intersection growth uses a ball");
      break;
    case Experiment::Scaling:
      if (cfg.t_grid.size() != 1 || cfg.t_grid[0] < 1.0)
        r.fail(grid_key, "scaling takes a single time t >= 1");
      if (cfg.shape.kind != Shape::Kind::Ball) r.fail("shape", "scaling uses a ball");
      if (cfg.replicas < 2) r.fail("replicas", "needs at least 2 replicas");
      break;
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigLineError(0, "cannot open config '" + path + "'");
  return parse_config(in);
}

std::string content_hash(const std::string& text) {
  const std::string blob = "blob " + std::to_string(text.size()) + '\0' + text;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr);
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return s.str();
}

std::size_t SampleTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw MisuseError("sample table has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

bool SampleTable::has(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

namespace {

double parse_number(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("bad number '" + s + "' in CSV");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string item;
  while (std::getline(s, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string row_text(const SampleRow& row) {
  std::string s = std::to_string(row.replica) + "," + format_number(row.t);
  for (double v : row.values) s += "," + format_number(v);
  return s;
}

std::optional<SampleRow> parse_row(const std::string& line, std::size_t n_values) {
  const auto f = split(line);
  if (f.size() != n_values + 2) return std::nullopt;
  try {
    SampleRow row;
    const double rep = parse_number(f[0]);
    if (!(rep >= 0) || rep != std::floor(rep)) return std::nullopt;
    row.replica = static_cast<std::uint32_t>(rep);
    row.t = parse_number(f[1]);
    for (std::size_t i = 0; i < n_values; ++i) row.values.push_back(parse_number(f[i + 2]));
    return row;
  } catch (const ConfigError&) {
    return std::nullopt;
  }
}

}  // namespace

void write_table_csv(std::ostream& out, const SampleTable& table) {
  out << "replica,t";
  for (const auto& c : table.columns) out << ',' << c;
  out << '\n';
  for (const auto& row : table.rows) out << row_text(row) << '\n';
}

SampleTable read_table_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty samples file");
  auto header = split(line);
  if (header.size() < 2 || header[0] != "replica" || header[1] != "t")
    throw ConfigError("samples header must start with 'replica,t'");
  SampleTable table;
  table.columns.assign(header.begin() + 2, header.end());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto row = parse_row(line, table.columns.size());
    if (!row) throw ConfigError("malformed samples row at line " + std::to_string(lineno));
    table.rows.push_back(std::move(*row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

CapacityEstimate capacity_of(const ExperimentConfig& cfg) {
  if (cfg.shape.capacity_hint) return {*cfg.shape.capacity_hint, 0.0, CapacityEstimate::Method::ClosedForm, 0.0};
  if (cfg.shape.kind == Shape::Kind::Ball) return capacity_ball(cfg.shape.radius);
  return {std::numeric_limits<double>::quiet_NaN(), 0.0, CapacityEstimate::Method::ClosedForm, 0.0};
}

QuadratureConfig quadrature_of(const ExperimentConfig& cfg) {
  QuadratureConfig q;
  q.outer_step = cfg.ilt_outer_step;
  q.inner_step = cfg.inner_step_H;
  q.denom_floor = cfg.denom_floor;
  return q;
}

Path3D ilt_path(const ExperimentConfig& cfg, const Path3D& fine) {
  const auto m = static_cast<std::size_t>(std::llround(cfg.ilt_outer_step / cfg.step_h));
  Path3D p = m == 1 ? fine : subsample_path(fine, m);
  p.step_h = cfg.ilt_outer_step;
  return p;
}

}  // namespace

std::vector<std::string> raw_columns(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::Capacity: return {"value", "std_error", "horizon_bias"};
    case Experiment::MeanExpansion:
      return cfg.halving_study ? std::vector<std::string>{"m_raw", "m_raw_half_step"}
                               : std::vector<std::string>{"m_raw"};
    case Experiment::Clt: return {"m_raw"};
    case Experiment::StrongApprox:
      return cfg.coupled_ball_radius ? std::vector<std::string>{"m_raw", "n_mart", "m_raw_coupled"}
                                     : std::vector<std::string>{"m_raw", "n_mart"};
    case Experiment::Clock:
      return {"alpha", "n_mart", "v_clock", "corr_end", "corr_diag", "clamp_events", "kernel_evals",
              "alpha_mollified"};
    case Experiment::Lil:
    case Experiment::Asclt: return {"m_raw"};
    case Experiment::IntersectionGrowth: return {"v_horizon", "v_sensitivity"};
    case Experiment::Scaling: return {"m_direct", "m_scaled"};
  }
  return {};
}

std::vector<SampleRow> simulate_replica(const ExperimentConfig& cfg, std::uint32_t replica) {
  std::vector<SampleRow> rows;
  const std::vector<double>& grid = cfg.t_grid;
  const double t_max = grid.empty() ? 0.0 : grid.back();
  auto path_cfg = [&](std::uint32_t rep, double tmax, double h) {
    PathConfig pc;
    pc.base_seed = cfg.base_seed;
    pc.replica_index = rep;
    pc.t_max = tmax;
    pc.step_h = h;
    return pc;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();

  switch (cfg.experiment) {
    case Experiment::Capacity: {
      const CapacityEstimate c = capacity_mc(cfg.shape, cfg.launch_radius, cfg.n_trials, cfg.horizon,
                                             path_cfg(replica, cfg.horizon, cfg.min_step));
      rows.push_back({replica, cfg.horizon, {c.value, c.std_error, c.horizon_bias}});
      break;
    }
    case Experiment::MeanExpansion:
    case Experiment::Clt:
    case Experiment::Lil:
    case Experiment::Asclt:
    case Experiment::StrongApprox: {
      const Path3D path = gen_path(path_cfg(replica, t_max, cfg.step_h));
      const auto prof = sausage_profile(path, cfg.shape, grid, cfg.n_samples_volume);
      std::vector<VolumeEstimate> extra;
      if (cfg.experiment == Experiment::MeanExpansion && cfg.halving_study)
        extra = sausage_profile(refine_path(path), cfg.shape, grid, cfg.n_samples_volume);
      std::vector<IltRecord> ilt;
      if (cfg.experiment == Experiment::StrongApprox) {
        ilt = ilt_sweep(ilt_path(cfg, path), grid, quadrature_of(cfg));
        if (cfg.coupled_ball_radius)
          extra = sausage_profile(path, Shape::ball(*cfg.coupled_ball_radius), grid, cfg.n_samples_volume);
      }
      for (std::size_t i = 0; i < grid.size(); ++i) {
        SampleRow row{replica, grid[i], {prof[i].value}};
        if (cfg.experiment == Experiment::MeanExpansion && cfg.halving_study) row.values.push_back(extra[i].value);
        if (cfg.experiment == Experiment::StrongApprox) {
          row.values.push_back(ilt[i].n_mart);
          if (cfg.coupled_ball_radius) row.values.push_back(extra[i].value);
        }
        rows.push_back(std::move(row));
      }
      break;
    }
    case Experiment::Clock: {
      const Path3D path = gen_path(path_cfg(replica, t_max, cfg.step_h));
      const auto recs = ilt_sweep(ilt_path(cfg, path), grid, quadrature_of(cfg));
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const IltRecord& rec = recs[i];
        double moll = nan;
        if (cfg.mollifier_rho && i == 0)
          moll = alpha_mollified_region(path, grid[0], 1.0, *cfg.mollifier_rho, cfg.step_h);
        rows.push_back({replica, grid[i],
                        {rec.alpha, rec.n_mart, rec.v_clock, rec.corr_end, rec.corr_diag,
                         static_cast<double>(rec.clamp_events), static_cast<double>(rec.kernel_evals), moll}});
      }
      break;
    }
    case Experiment::IntersectionGrowth: {
      const Path3D a = gen_path(path_cfg(replica, t_max, cfg.step_h));
      const double tb_max = std::max(cfg.horizon_factor, cfg.sensitivity_factor) * t_max;
      const Path3D b = gen_path(path_cfg(replica + kPartnerOffset, tb_max, cfg.step_h));
      for (double t : grid) {
        const auto v1 = sausage_intersection_volume(a, b, cfg.shape, t, cfg.horizon_factor * t, cfg.n_samples_volume);
        const auto v2 = sausage_intersection_volume(a, b, cfg.shape, t, cfg.sensitivity_factor * t, cfg.n_samples_volume);
        rows.push_back({replica, t, {v1.value, v2.value}});
      }
      break;
    }
    case Experiment::Scaling: {
      const double t = grid[0];
      const Path3D direct = gen_path(path_cfg(replica, t, cfg.step_h));
      const double m_direct = tube_volume(direct, cfg.shape, t, cfg.n_samples_volume).value;
      const Path3D unit = gen_path(path_cfg(replica + kPartnerOffset, 1.0, cfg.step_h / t));
      const double m_unit =
          tube_volume(unit, Shape::ball(cfg.shape.radius / std::sqrt(t)), 1.0, cfg.n_samples_volume).value;
      rows.push_back({replica, t, {m_direct, std::pow(t, 1.5) * m_unit}});
      break;
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

bool same_t(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

std::vector<double> column_at(const SampleTable& table, const std::string& name, double t) {
  const std::size_t c = table.column(name);
  std::vector<double> out;
  for (const auto& row : table.rows)
    if (same_t(row.t, t)) out.push_back(row.values[c]);
  return out;
}

std::vector<double> distinct_times(const SampleTable& table) {
  std::vector<double> ts;
  for (const auto& row : table.rows)
    if (std::none_of(ts.begin(), ts.end(), [&](double t) { return same_t(t, row.t); })) ts.push_back(row.t);
  std::sort(ts.begin(), ts.end());
  return ts;
}

std::string tname(double t) { return format_number(t); }

StatReport diagnostic(std::string name, double value, double reference, std::string spec) {
  return {std::move(name), value, value, value, reference, std::move(spec), Verdict::Diagnostic};
}

std::vector<FluctuationSample> fluctuations(const ExperimentConfig& cfg, const SampleTable& table,
                                            double t, const std::string& m_col,
                                            const CapacityEstimate& cap) {
  auto samples = center_samples(column_at(table, m_col, t), t, cap, cfg.centering);
  if (table.has("n_mart") && m_col == "m_raw") attach_martingale(samples, column_at(table, "n_mart", t), cap);
  return samples;
}

}  // namespace

SampleTable finalize_samples(const ExperimentConfig& cfg, SampleTable raw) {
  std::stable_sort(raw.rows.begin(), raw.rows.end(),
                   [](const SampleRow& a, const SampleRow& b) { return a.replica < b.replica; });
  const bool fluct = cfg.experiment == Experiment::Clt || cfg.experiment == Experiment::StrongApprox;
  if (!fluct) return raw;
  const CapacityEstimate cap = capacity_of(cfg);
  SampleTable out;
  out.columns = {"m_raw", "m_centered", "m_normalized", "n_mart", "x_residual"};
  const bool coupled = raw.has("m_raw_coupled");
  if (coupled) out.columns.insert(out.columns.end(), {"m_raw_coupled", "m_centered_coupled"});
  const std::size_t cm = raw.column("m_raw");
  std::map<double, double> ref, ref_coupled;
  const CapacityEstimate cap_c = coupled ? capacity_ball(*cfg.coupled_ball_radius) : cap;
  for (double t : distinct_times(raw)) {
    const auto v = column_at(raw, "m_raw", t);
    ref[t] = cfg.centering == Centering::EmpiricalMean ? mean(v) : reference_mean(t, cap.value);
    if (coupled) {
      const auto vc = column_at(raw, "m_raw_coupled", t);
      ref_coupled[t] = cfg.centering == Centering::EmpiricalMean ? mean(vc) : reference_mean(t, cap_c.value);
    }
  }
  for (const auto& row : raw.rows) {
    double key = row.t;
    for (const auto& [t, _] : ref)
      if (same_t(t, row.t)) key = t;
    FluctuationSample s;
    s.t = row.t;
    s.m_raw = row.values[cm];
    s.m_centered = s.m_raw - ref[key];
    s.m_normalized = s.m_centered / (fluctuation_scale(cap.value) * std::sqrt(s.t * std::log(s.t)));
    s.n_mart = raw.has("n_mart") ? row.values[raw.column("n_mart")] : 0.0;
    s.x_residual = residual_of(s, cap);
    SampleRow o{row.replica, row.t, {s.m_raw, s.m_centered, s.m_normalized, s.n_mart, s.x_residual}};
    if (coupled) {
      const double mc = row.values[raw.column("m_raw_coupled")];
      o.values.push_back(mc);
      o.values.push_back(mc - ref_coupled[key]);
    }
    out.rows.push_back(std::move(o));
  }
  return out;
}

std::vector<StatReport> compute_reports(const ExperimentConfig& cfg, const SampleTable& table) {
  std::vector<StatReport> reports;
  const CapacityEstimate cap = capacity_of(cfg);
  const auto times = distinct_times(table);

  switch (cfg.experiment) {
    case Experiment::Capacity: {
      const double t = times.front();
      const auto v = column_at(table, "value", t);
      const auto se = column_at(table, "std_error", t);
      const auto bias = column_at(table, "horizon_bias", t);
      double se2 = 0.0;
      for (double s : se) se2 += s * s;
      const double n = static_cast<double>(v.size());
      const double sigma = std::sqrt(se2) / n;
      const double value = mean(v);
      const double bias_bar = mean(bias);
      const bool ball = cfg.shape.kind == Shape::Kind::Ball;
      const double ref = ball ? capacity_ball(cfg.shape.radius).value : std::numeric_limits<double>::quiet_NaN();
      if (ball)
        reports.push_back(diagnostic("capacity_closed_form", ref, ref, "closed form 2*pi*r"));
      StatReport r{"capacity_mc", value, value - 3 * sigma, value + 3 * sigma, ref,
                   "|mc - closed form| <= 3 sigma + 5% + horizon bias (sigma = " + fmt(sigma) +
                       ", bias = " + fmt(bias_bar) + ")",
                   Verdict::Diagnostic};
      if (ball)
        r.verdict = std::abs(value - ref) <= 3 * sigma + 0.05 * ref + bias_bar ? Verdict::Pass : Verdict::Fail;
      reports.push_back(r);
      break;
    }
    case Experiment::MeanExpansion: {
      const double bstar = reference_mean(1.0, cap.value) - cap.value;
      auto fits = [&](const std::string& col, const std::string& suffix, bool gated) {
        std::vector<double> ts, means, roots, excess;
        for (double t : times) {
          const double m = mean(column_at(table, col, t));
          ts.push_back(t);
          means.push_back(m);
          roots.push_back(std::sqrt(t));
          excess.push_back(m - cap.value * t);
        }
        const LinearFit slope = linear_fit(ts, means);
        const LinearFit b = linear_fit(roots, excess);
        const double rs = std::abs(slope.slope / cap.value - 1.0);
        const double rb = std::abs(b.slope / bstar - 1.0);
        reports.push_back({"capacity_slope" + suffix, slope.slope, slope.slope - 3 * slope.slope_se,
                           slope.slope + 3 * slope.slope_se, cap.value,
                           "|slope/C - 1| <= 0.05 (got " + fmt(rs) + ")",
                           gated ? (rs <= 0.05 ? Verdict::Pass : Verdict::Fail) : Verdict::Diagnostic});
        reports.push_back({"sqrt_t_coefficient" + suffix, b.slope, b.slope - 3 * b.slope_se,
                           b.slope + 3 * b.slope_se, bstar,
                           "|b/b_ref - 1| <= 0.2 (got " + fmt(rb) + ")",
                           gated ? (rb <= 0.2 ? Verdict::Pass : Verdict::Fail) : Verdict::Diagnostic});
        return b.slope;
      };
      const double b = fits("m_raw", "", true);
      if (cfg.halving_study) {
        const double b_half = fits("m_raw_half_step", "_half_step", false);
        const double moved = std::abs(b_half - bstar) - std::abs(b - bstar);
        reports.push_back({"halving_moves_toward_target", moved, moved, moved, 0.0,
                           "|b_half - b_ref| - |b - b_ref| < 0",
                           moved < 0 ? Verdict::Pass : Verdict::Fail});
        const double rich = (std::numbers::sqrt2 * b_half - b) / (std::numbers::sqrt2 - 1.0);
        reports.push_back(diagnostic("sqrt_t_coefficient_extrapolated", rich, bstar,
                                     "diagnostic: sqrt(h) extrapolation of the two step sizes"));
      }
      break;
    }
    case Experiment::Clt: {
      for (double t : times) {
        const auto s = fluctuations(cfg, table, t, "m_raw", cap);
        if (t >= 1000.0 && s.size() >= 300) {
          StatReport r = clt_report(s, cap, cfg.base_seed);
          r.name += "_t" + tname(t);
          reports.push_back(r);
        } else {
          std::vector<double> x;
          for (const auto& f : s) x.push_back(f.m_centered / std::sqrt(t * std::log(t)));
          reports.push_back(diagnostic("fluctuation_std_t" + tname(t), std::sqrt(variance(x)),
                                       fluctuation_scale(cap.value), "diagnostic: below the CLT time range"));
        }
      }
      break;
    }
    case Experiment::StrongApprox: {
      std::vector<FluctuationSample> all;
      for (double t : times) {
        const auto s = fluctuations(cfg, table, t, "m_raw", cap);
        std::vector<double> m, n;
        for (const auto& f : s) {
          m.push_back(f.m_centered);
          n.push_back(f.n_mart);
        }
        reports.push_back(diagnostic("corr_m_n_t" + tname(t), pearson(m, n), -1.0,
                                     "diagnostic: correlation of m_centered with N_t"));
        all.insert(all.end(), s.begin(), s.end());
      }
      for (const auto& p : residual_profile(all, times, cfg.base_seed))
        reports.push_back({"residual_rho_t" + tname(p.t), p.rho, std::min(p.band_low, p.rho),
                           std::max(p.band_high, p.rho), 0.5, "diagnostic: 3 sigma bootstrap band",
                           Verdict::Diagnostic});
      reports.push_back(residual_report(all, times, cfg.base_seed));
      if (table.has("m_raw_coupled")) {
        const double t = times.back();
        const auto a = fluctuations(cfg, table, t, "m_raw", cap);
        const CapacityEstimate cap_c = capacity_ball(*cfg.coupled_ball_radius);
        const auto b = center_samples(column_at(table, "m_raw_coupled", t), t, cap_c, cfg.centering);
        std::vector<std::uint32_t> reps;
        for (const auto& row : table.rows)
          if (same_t(row.t, t)) reps.push_back(row.replica);
        StatReport r = multi_shape_coupling(a, b, reps, reps, cap, cap_c);
        r.name += "_t" + tname(t);
        reports.push_back(r);
      }
      break;
    }
    case Experiment::Clock: {
      double clamps = 0.0, evals = 0.0;
      for (double t : times) {
        const auto v = column_at(table, "v_clock", t);
        const auto n = column_at(table, "n_mart", t);
        const double ref = 2.0 * t * std::log(t);
        const double ratio = mean(v) / ref;
        const double se = std_error_of_mean(v) / ref;
        const bool ok = ratio >= 0.85 && ratio <= 1.15;
        reports.push_back({"clock_ratio_t" + tname(t), ratio, ratio - 3 * se, ratio + 3 * se, 1.0,
                           "V_t / (2 t log t) within [0.85, 1.15]", ok ? Verdict::Pass : Verdict::Fail});
        const double nvar = variance(n) / (t * std::log(t) / (2.0 * std::numbers::pi * std::numbers::pi));
        reports.push_back(diagnostic("martingale_variance_ratio_t" + tname(t), nvar, 1.0,
                                     "diagnostic: var N_t / (t log t / (2 pi^2))"));
        reports.push_back(diagnostic("martingale_mean_z_t" + tname(t), mean(n) / std_error_of_mean(n), 0.0,
                                     "diagnostic: mean of N_t in standard errors"));
        if (same_t(t, times.back())) {
          for (double c : column_at(table, "clamp_events", t)) clamps += c;
          for (double e : column_at(table, "kernel_evals", t)) evals += e;
        }
      }
      const double frac = evals > 0 ? clamps / evals : 0.0;
      reports.push_back({"clamp_fraction", frac, frac, frac, 1e-3, "clamp_events / kernel evaluations < 0.001",
                         frac < 1e-3 ? Verdict::Pass : Verdict::Fail});
      if (cfg.mollifier_rho) {
        const double t = times.front();
        const auto a = column_at(table, "alpha", t);
        const auto m = column_at(table, "alpha_mollified", t);
        const double diff = mean(a) - mean(m);
        const double se = std::hypot(std_error_of_mean(a), std_error_of_mean(m));
        reports.push_back({"tanaka_minus_mollified_t" + tname(t), diff, diff - 3 * se, diff + 3 * se, 0.0,
                           "|mean(alpha) - mean(alpha_mollified)| <= 3 combined standard errors (se = " +
                               fmt(se) + ")",
                           std::abs(diff) <= 3 * se ? Verdict::Pass : Verdict::Fail});
      }
      break;
    }
    case Experiment::Lil:
    case Experiment::Asclt: {
      std::map<std::uint32_t, Trajectory> traj;
      const std::size_t c = table.column("m_raw");
      for (const auto& row : table.rows) traj[row.replica].emplace_back(row.t, row.values[c]);
      for (const auto& [rep, tr] : traj) {
        const std::string suffix = "_r" + std::to_string(rep);
        if (cfg.experiment == Experiment::Lil) {
          for (StatReport r : lil_diagnostic(tr, cap)) {
            r.name += suffix;
            reports.push_back(r);
          }
        } else {
          StatReport r = asclt_diagnostic(tr, cap);
          r.name += suffix;
          reports.push_back(r);
        }
      }
      break;
    }
    case Experiment::IntersectionGrowth: {
      std::vector<double> ratios;
      for (double t : times) {
        const auto v = column_at(table, "v_horizon", t);
        const auto s = column_at(table, "v_sensitivity", t);
        const double ratio = mean(v) / std::sqrt(t);
        ratios.push_back(ratio);
        reports.push_back(diagnostic("intersection_over_sqrt_t_t" + tname(t), ratio, ratios.front(),
                                     "diagnostic: mean intersection volume / sqrt(t)"));
        reports.push_back(diagnostic("truncation_sensitivity_t" + tname(t), mean(s) / mean(v), 1.0,
                                     "diagnostic: mean volume at the shorter horizon / at the full horizon"));
      }
      const double c0 = ratios.front();
      bool ok = true;
      double worst = 1.0;
      for (double r : ratios) {
        ok = ok && r >= c0 / 2 && r <= 2 * c0;
        worst = std::max(worst, std::max(r / c0, c0 / r));
      }
      reports.push_back({"intersection_growth_band", worst, worst, worst, 2.0,
                         "every mean/sqrt(t) within a factor 2 of the value at the smallest t",
                         ok ? Verdict::Pass : Verdict::Fail});
      break;
    }
    case Experiment::Scaling: {
      const double t = times.front();
      const auto a = column_at(table, "m_direct", t);
      const auto b = column_at(table, "m_scaled", t);
      const KsTwoSample ks = ks_two_sample(a, b);
      reports.push_back({"scaling_ks_t" + tname(t), ks.statistic, ks.statistic, ks.statistic, 0.0,
                         "two-sample KS p >= 0.01 (p = " + fmt(ks.p_value) + ")",
                         ks.p_value >= 0.01 ? Verdict::Pass : Verdict::Fail});
      break;
    }
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

struct Manifest {
  std::string config_path;
  std::string canonical;
  std::string hash;
  std::string experiment;
  std::uint64_t base_seed = 0;
  std::uint32_t replicas = 0;
  std::set<std::uint32_t> completed;
  bool complete = false;
  double wall_clock_seconds = 0.0;
  std::size_t threads = 1;
};

json config_echo(const std::string& canonical) {
  json j = json::object();
  std::istringstream in(canonical);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return j;
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  json j;
  j["config_path"] = m.config_path;
  j["config"] = config_echo(m.canonical);
  j["config_canonical"] = m.canonical;
  j["config_hash"] = m.hash;
  j["experiment"] = m.experiment;
  j["seeds"] = {{"base_seed", m.base_seed},
                {"replica_indices", {{"first", 0}, {"count", m.replicas}}},
                {"partner_replica_offset", kPartnerOffset},
                {"volume_sample_key", "mix64(base_seed ^ 5), keyed per replica"}};
  j["completed_replicas"] = std::vector<std::uint32_t>(m.completed.begin(), m.completed.end());
  j["status"] = m.complete ? "complete" : "partial";
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  j["threads"] = m.threads;
  const fs::path tmp = dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, dir / "manifest.json");
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigLineError(0, "cannot open manifest '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigLineError(0, std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    Manifest m;
    m.config_path = j.at("config_path").get<std::string>();
    m.canonical = j.at("config_canonical").get<std::string>();
    m.hash = j.at("config_hash").get<std::string>();
    m.experiment = j.at("experiment").get<std::string>();
    m.base_seed = j.at("seeds").at("base_seed").get<std::uint64_t>();
    m.replicas = j.at("seeds").at("replica_indices").at("count").get<std::uint32_t>();
    for (auto r : j.at("completed_replicas")) m.completed.insert(r.get<std::uint32_t>());
    m.complete = j.at("status").get<std::string>() == "complete";
    m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw ConfigLineError(0, std::string("manifest is missing fields: ") + e.what());
  }
}

fs::path output_dir_of(const std::string& config_path, const ExperimentConfig& cfg) {
  fs::path out(cfg.output_dir);
  if (out.is_relative()) out = fs::absolute(config_path).parent_path() / out;
  return out.lexically_normal();
}

int report_exit(const std::vector<StatReport>& reports, std::ostream& log) {
  bool ok = true;
  for (const auto& r : reports) {
    log << verdict_name(r.verdict) << "  " << r.name << " = " << fmt(r.value) << " (reference "
        << fmt(r.reference) << "; " << r.tolerance_spec << ")\n";
    if (r.verdict == Verdict::Fail) ok = false;
  }
  return ok ? kExitOk : kExitFailedVerdict;
}

int execute(const ExperimentConfig& cfg, Manifest& manifest, const fs::path& dir, const RunOptions& opts,
            std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path ledger_path = dir / "ledger.csv";
  const auto columns = raw_columns(cfg);

  std::map<std::uint32_t, std::vector<SampleRow>> done;
  if (!manifest.completed.empty()) {
    std::ifstream in(ledger_path);
    std::string line;
    while (std::getline(in, line))
      if (auto row = parse_row(line, columns.size()); row && manifest.completed.count(row->replica))
        done[row->replica].push_back(std::move(*row));
    for (std::uint32_t r : manifest.completed)
      if (!done.count(r)) {
        log << "ledger has no rows for replica " << r << "; it will be recomputed\n";
      }
    std::set<std::uint32_t> kept;
    for (const auto& [r, _] : done) kept.insert(r);
    manifest.completed = kept;
  }
  // Rewrite the ledger so that only complete replica blocks remain.
  {
    std::ofstream out(ledger_path, std::ios::trunc);
    for (const auto& [r, rows] : done)
      for (const auto& row : rows) out << row_text(row) << '\n';
  }

  std::vector<std::uint32_t> todo;
  for (std::uint32_t r = 0; r < cfg.replicas; ++r)
    if (!manifest.completed.count(r)) todo.push_back(r);
  if (opts.stop_after && todo.size() > *opts.stop_after) todo.resize(*opts.stop_after);

  manifest.threads = opts.threads ? opts.threads : worker_threads();
  std::mutex mu;
  std::ofstream ledger(ledger_path, std::ios::app);
  try {
    parallel_for(
        todo.size(),
        [&](std::size_t i) {
          const std::uint32_t r = todo[i];
          auto rows = simulate_replica(cfg, r);
          std::lock_guard lock(mu);
          for (const auto& row : rows) ledger << row_text(row) << '\n';
          ledger.flush();
          done[r] = std::move(rows);
          manifest.completed.insert(r);
          write_manifest(dir, manifest);
        },
        manifest.threads);
  } catch (const TaskError& e) {
    manifest.wall_clock_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(dir, manifest);
    log << "error: replica " << todo[e.index()] << ": " << e.what() << '\n';
    return kExitRuntime;
  }
  ledger.close();
  manifest.wall_clock_seconds +=
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (manifest.completed.size() < cfg.replicas) {
    write_manifest(dir, manifest);
    log << "checkpointed " << manifest.completed.size() << " of " << cfg.replicas
        << " replicas; continue with: sausage-lab resume " << (dir / "manifest.json").string() << '\n';
    return kExitOk;
  }

  SampleTable raw;
  raw.columns = columns;
  for (auto& [r, rows] : done)
    for (auto& row : rows) raw.rows.push_back(row);
  std::vector<StatReport> reports;
  SampleTable table;
  try {
    table = finalize_samples(cfg, std::move(raw));
    reports = compute_reports(cfg, table);
  } catch (const std::exception& e) {
    write_manifest(dir, manifest);
    log << "error: computing reports: " << e.what() << '\n';
    return kExitRuntime;
  }
  {
    std::ofstream out(dir / "samples.csv");
    write_table_csv(out, table);
  }
  {
    std::ofstream out(dir / "reports.json");
    write_reports_json(out, reports);
  }
  manifest.complete = true;
  write_manifest(dir, manifest);
  return report_exit(reports, log);
}

}  // namespace

int run_command(const std::string& config_path, const RunOptions& opts, std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigLineError& e) {
    log << config_path << ':' << e.line() << ": " << e.what() << '\n';
    return kExitInvalid;
  }
  const fs::path dir = output_dir_of(config_path, cfg);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    log << config_path << ':' << 0 << ": output_dir '" << dir.string() << "' is not writable\n";
    return kExitInvalid;
  }
  Manifest m;
  m.config_path = fs::absolute(config_path).lexically_normal().string();
  m.canonical = cfg.canonical;
  m.hash = content_hash(cfg.canonical);
  m.experiment = experiment_name(cfg.experiment);
  m.base_seed = cfg.base_seed;
  m.replicas = cfg.replicas;
  try {
    write_manifest(dir, m);
  } catch (const std::exception& e) {
    log << config_path << ':' << 0 << ": cannot write to output_dir: " << e.what() << '\n';
    return kExitInvalid;
  }
  return execute(cfg, m, dir, opts, log);
}

int resume_command(const std::string& manifest_path, const RunOptions& opts, std::ostream& log) {
  Manifest m;
  ExperimentConfig cfg;
  try {
    m = read_manifest(manifest_path);
    cfg = load_config(m.config_path);
  } catch (const ConfigLineError& e) {
    log << manifest_path << ": " << e.what() << '\n';
    return kExitInvalid;
  }
  if (content_hash(cfg.canonical) != m.hash || content_hash(m.canonical) != m.hash) {
    log << manifest_path << ": config hash mismatch; the config changed since the run started\n";
    return kExitInvalid;
  }
  const fs::path dir = fs::absolute(manifest_path).parent_path();
  if (m.complete && m.completed.size() == cfg.replicas) {
    log << "run already complete; nothing to do\n";
    return kExitOk;
  }
  return execute(cfg, m, dir, opts, log);
}

int report_command(const std::string& samples_path, std::ostream& log) {
  const fs::path dir = fs::absolute(samples_path).parent_path();
  Manifest m;
  ExperimentConfig cfg;
  SampleTable table;
  try {
    m = read_manifest(dir / "manifest.json");
    std::istringstream text(m.canonical);
    cfg = parse_config(text);
    std::ifstream in(samples_path);
    if (!in) throw ConfigLineError(0, "cannot open '" + samples_path + "'");
    table = read_table_csv(in);
  } catch (const ConfigError& e) {
    log << samples_path << ": " << e.what() << '\n';
    return kExitInvalid;
  }
  std::vector<StatReport> reports;
  try {
    reports = compute_reports(cfg, table);
  } catch (const std::exception& e) {
    log << "error: computing reports: " << e.what() << '\n';
    return kExitRuntime;
  }
  std::ofstream out(dir / "reports.json");
  write_reports_json(out, reports);
  return report_exit(reports, log);
}

}  // namespace sausage
