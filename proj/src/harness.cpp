#include "sausage/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "sausage/errors.hpp"
#include "sausage/stats.hpp"

namespace sausage {

namespace {

constexpr std::size_t kBootstrapResamples = 1000;

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

double sqrt_t_log_t(double t) { return std::sqrt(t * std::log(t)); }

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

void order_ci(StatReport& r) {
  r.ci_low = std::min(r.ci_low, r.value);
  r.ci_high = std::max(r.ci_high, r.value);
}

}  // namespace

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "Pass";
    case Verdict::Fail: return "Fail";
    case Verdict::Diagnostic: return "Diagnostic";
  }
  return "Diagnostic";
}

Verdict verdict_from_name(const std::string& s) {
  if (s == "Pass") return Verdict::Pass;
  if (s == "Fail") return Verdict::Fail;
  if (s == "Diagnostic") return Verdict::Diagnostic;
  throw ConfigError("unknown verdict '" + s + "'");
}

double reference_mean(double t, double capacity) {
  return capacity * t + 4.0 / std::pow(2.0 * std::numbers::pi, 1.5) * capacity * capacity * std::sqrt(t);
}

double fluctuation_scale(double capacity) {
  return capacity * capacity / (std::numbers::pi * std::numbers::sqrt2);
}

std::vector<FluctuationSample> center_samples(std::span<const double> volumes, double t,
                                              const CapacityEstimate& cap, Centering mode) {
  if (volumes.size() < 30) throw InsufficientDataError("center_samples: need at least 30 replicas");
  if (!(t >= 100.0)) throw DomainError("center_samples: need t >= 100");
  const double ref = mode == Centering::TheoreticalMean ? reference_mean(t, cap.value) : mean(volumes);
  const double norm = 1.0 / (fluctuation_scale(cap.value) * sqrt_t_log_t(t));
  std::vector<FluctuationSample> out(volumes.size());
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    FluctuationSample& s = out[i];
    s.t = t;
    s.m_raw = volumes[i];
    s.m_centered = volumes[i] - ref;
    s.m_normalized = s.m_centered * norm;
    s.x_residual = residual_of(s, cap);
  }
  return out;
}

double residual_of(const FluctuationSample& s, const CapacityEstimate& cap) {
  return s.m_centered + (cap.value * cap.value) * s.n_mart;
}

void attach_martingale(std::vector<FluctuationSample>& samples, std::span<const double> n_mart,
                       const CapacityEstimate& cap) {
  if (samples.size() != n_mart.size()) throw MisuseError("attach_martingale: size mismatch");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].n_mart = n_mart[i];
    samples[i].x_residual = residual_of(samples[i], cap);
  }
}

StatReport clt_report(std::span<const FluctuationSample> samples, const CapacityEstimate& cap,
                      std::uint64_t bootstrap_seed) {
  if (samples.size() < 300) throw InsufficientDataError("clt_report: need at least 300 replicas");
  const double t = samples.front().t;
  for (const auto& s : samples)
    if (!same_time(s.t, t)) throw MisuseError("clt_report: samples at mixed times");
  if (!(t >= 1000.0)) throw DomainError("clt_report: need t >= 1000");

  std::vector<double> scaled(samples.size()), normalized(samples.size());
  const double root = sqrt_t_log_t(t);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    scaled[i] = samples[i].m_centered / root;
    normalized[i] = samples[i].m_normalized;
  }
  const double target = fluctuation_scale(cap.value);
  const double sd = std::sqrt(variance(scaled));
  const double d = ks_statistic(normalized, normal_cdf);
  const double p = ks_pvalue(normalized.size(), d);

  auto boot = bootstrap(scaled.size(), kBootstrapResamples, bootstrap_seed,
                        [&](std::span<const std::size_t> idx) {
                          std::vector<double> v(idx.size());
                          for (std::size_t i = 0; i < idx.size(); ++i) v[i] = scaled[idx[i]];
                          return std::sqrt(variance(v));
                        });
  StatReport r;
  r.name = "clt_std";
  r.value = sd;
  r.ci_low = quantile(boot, 0.005);
  r.ci_high = quantile(boot, 0.995);
  r.reference = target;
  const double rel = std::abs(sd / target - 1.0);
  r.tolerance_spec = "KS p >= 0.01 (D = " + fmt(d) + ", p = " + fmt(p) +
                     ") and |std/ref - 1| <= 0.2 (got " + fmt(rel) + ")";
  r.verdict = (p >= 0.01 && rel <= 0.2) ? Verdict::Pass : Verdict::Fail;
  order_ci(r);
  return r;
}

std::vector<ResidualPoint> residual_profile(std::span<const FluctuationSample> samples,
                                            std::span<const double> t_grid,
                                            std::uint64_t bootstrap_seed) {
  std::vector<ResidualPoint> out;
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    const double t = t_grid[g];
    std::vector<double> x, m;
    for (const auto& s : samples)
      if (same_time(s.t, t)) {
        x.push_back(s.x_residual);
        m.push_back(s.m_centered);
      }
    if (x.size() < 100)
      throw InsufficientDataError("residual_report: fewer than 100 replicas at t = " + fmt(t));
    auto ratio = [&](std::span<const std::size_t> idx) {
      double sx = 0.0, sm = 0.0;
      for (std::size_t i : idx) {
        sx += x[i] * x[i];
        sm += m[i] * m[i];
      }
      return sm > 0.0 ? std::sqrt(sx / sm) : (sx > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    };
    std::vector<std::size_t> all(x.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    ResidualPoint pt;
    pt.t = t;
    pt.rho = ratio(all);
    pt.replicas = x.size();
    const auto boot = bootstrap(x.size(), kBootstrapResamples, bootstrap_seed + g, ratio);
    const double sigma = boot.size() > 1 && std::isfinite(pt.rho) ? std::sqrt(variance(boot)) : 0.0;
    pt.band_low = pt.rho - 3.0 * sigma;
    pt.band_high = pt.rho + 3.0 * sigma;
    out.push_back(pt);
  }
  return out;
}

StatReport residual_report(std::span<const FluctuationSample> samples,
                           std::span<const double> t_grid, std::uint64_t bootstrap_seed) {
  if (t_grid.size() < 2 || !(t_grid.back() >= 8.0 * t_grid.front()))
    throw InsufficientDataError("residual_report: t_grid must span at least a factor 8");
  const auto prof = residual_profile(samples, t_grid, bootstrap_seed);
  bool monotone = true;
  for (std::size_t i = 1; i < prof.size(); ++i) {
    const double s0 = (prof[i - 1].band_high - prof[i - 1].rho) / 3.0;
    const double s1 = (prof[i].band_high - prof[i].rho) / 3.0;
    if (prof[i].rho > prof[i - 1].rho + 3.0 * std::hypot(s0, s1)) monotone = false;
  }
  StatReport r;
  r.name = "residual_rho";
  r.value = prof.back().rho;
  r.ci_low = prof.back().band_low;
  r.ci_high = prof.back().band_high;
  r.reference = 0.5;
  std::string rhos;
  for (const auto& p : prof) rhos += (rhos.empty() ? "" : ", ") + fmt(p.t) + ":" + fmt(p.rho);
  r.tolerance_spec = "rho non-increasing within 3 sigma bands and rho(t_max) <= 0.5; rho = {" + rhos + "}";
  r.verdict = (monotone && r.value <= 0.5) ? Verdict::Pass : Verdict::Fail;
  order_ci(r);
  return r;
}

namespace {

void check_trajectory(const Trajectory& traj) {
  if (traj.size() < 50) throw InsufficientDataError("trajectory needs at least 50 checkpoints");
  for (std::size_t i = 1; i < traj.size(); ++i)
    if (!(traj[i].first > traj[i - 1].first)) throw ConfigError("trajectory times must increase");
  if (traj.back().first < 1e4) throw InsufficientDataError("trajectory must reach t >= 1e4");
}

}  // namespace

LilStatistics lil_statistics(const Trajectory& traj, const CapacityEstimate& cap) {
  check_trajectory(traj);
  LilStatistics s;
  double sup_abs = 0.0;
  for (const auto& [t, m] : traj) {
    const double dev = m - cap.value * t;
    sup_abs = std::max(sup_abs, std::abs(dev));
    if (t >= 100.0) {
      const double lt = std::log(t);
      s.limsup = std::max(s.limsup, dev / std::sqrt(t * lt * std::log(lt)));
    }
  }
  const double T = traj.back().first;
  const double lT = std::log(T);
  s.chung = std::sqrt(std::log(lT) / (T * lT)) * sup_abs;
  return s;
}

std::vector<StatReport> lil_diagnostic(const Trajectory& traj, const CapacityEstimate& cap) {
  const LilStatistics s = lil_statistics(traj, cap);
  const double c2 = cap.value * cap.value;
  StatReport up{"lil_limsup", s.limsup, s.limsup, s.limsup, c2 / std::numbers::pi,
                "diagnostic only: asymptotic constant C^2/pi", Verdict::Diagnostic};
  StatReport chung{"lil_chung", s.chung, s.chung, s.chung, c2 / 4.0,
                   "diagnostic only: asymptotic constant C^2/4", Verdict::Diagnostic};
  return {up, chung};
}

WeightedSample asclt_sample(const Trajectory& traj, const CapacityEstimate& cap) {
  check_trajectory(traj);
  WeightedSample w;
  const double c2 = cap.value * cap.value;
  double prev = 0.0;
  double total = 0.0;
  for (const auto& [t, m] : traj) {
    if (t <= 1.0) {
      prev = t;
      continue;
    }
    const double lo = std::max(prev, 1.0);
    w.values.push_back(std::numbers::pi * std::numbers::sqrt2 * (m - cap.value * t) /
                       (c2 * sqrt_t_log_t(t)));
    w.weights.push_back((t - lo) / t);
    total += w.weights.back();
    prev = t;
  }
  for (double& x : w.weights) x /= total;
  return w;
}

double weighted_ks_normal(const WeightedSample& w) {
  std::vector<std::size_t> idx(w.values.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return w.values[a] < w.values[b]; });
  double cum = 0.0, d = 0.0;
  for (std::size_t i : idx) {
    const double f = normal_cdf(w.values[i]);
    d = std::max(d, f - cum);
    cum += w.weights[i];
    d = std::max(d, cum - f);
  }
  return d;
}

StatReport asclt_diagnostic(const Trajectory& traj, const CapacityEstimate& cap) {
  const WeightedSample w = asclt_sample(traj, cap);
  double s2 = 0.0;
  for (double x : w.weights) s2 += x * x;
  const double n_eff = 1.0 / s2;
  const double crit = 1.3581 / std::sqrt(n_eff);
  const double d = weighted_ks_normal(w);
  return {"asclt_ks", d, d, d, crit,
          "diagnostic only: reference is the 5% critical value at effective size " + fmt(n_eff),
          Verdict::Diagnostic};
}

double empirical_lp(std::span<const double> samples, double p) {
  if (!(p >= 1.0)) throw DomainError("empirical_lp: need p >= 1");
  if (samples.size() < 30) throw InsufficientDataError("empirical_lp: need at least 30 samples");
  double s = 0.0;
  for (double x : samples) s += std::pow(std::abs(x), p);
  return std::pow(s / static_cast<double>(samples.size()), 1.0 / p);
}

CouplingStatistics coupling_statistics(std::span<const FluctuationSample> a,
                                       std::span<const FluctuationSample> b) {
  if (a.size() != b.size()) throw MisuseError("coupling: sample counts differ");
  std::vector<double> x(a.size()), y(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    x[i] = a[i].m_centered;
    y[i] = b[i].m_centered;
  }
  CouplingStatistics c;
  c.correlation = pearson(x, y);
  const double my = mean(y), mx = mean(x);
  double sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  c.slope = syy > 0.0 ? sxy / syy : 0.0;
  return c;
}

StatReport multi_shape_coupling(std::span<const FluctuationSample> a,
                                std::span<const FluctuationSample> b,
                                std::span<const std::uint32_t> replicas_a,
                                std::span<const std::uint32_t> replicas_b,
                                const CapacityEstimate& cap_a, const CapacityEstimate& cap_b) {
  if (a.size() != replicas_a.size() || b.size() != replicas_b.size() ||
      !std::equal(replicas_a.begin(), replicas_a.end(), replicas_b.begin(), replicas_b.end()))
    throw MisuseError("multi_shape_coupling: replica indices do not match pairwise");
  if (a.size() < 100) throw InsufficientDataError("multi_shape_coupling: need at least 100 pairs");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_time(a[i].t, a.front().t) || !same_time(b[i].t, a.front().t))
      throw MisuseError("multi_shape_coupling: samples at mixed times");
  const CouplingStatistics c = coupling_statistics(a, b);
  const double target = (cap_a.value * cap_a.value) / (cap_b.value * cap_b.value);
  StatReport r;
  r.name = "coupling_slope";
  r.value = c.slope;
  r.ci_low = c.slope;
  r.ci_high = c.slope;
  r.reference = target;
  const double rel = std::abs(c.slope / target - 1.0);
  r.tolerance_spec = "correlation >= 0.9 (got " + fmt(c.correlation) +
                     ") and |slope/ref - 1| <= 0.25 (got " + fmt(rel) + ")";
  r.verdict = (c.correlation >= 0.9 && rel <= 0.25) ? Verdict::Pass : Verdict::Fail;
  return r;
}

namespace {

nlohmann::json number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double number_of(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

void write_reports_json(std::ostream& out, std::span<const StatReport> reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports)
    arr.push_back({{"name", r.name},
                   {"value", number(r.value)},
                   {"ci_low", number(r.ci_low)},
                   {"ci_high", number(r.ci_high)},
                   {"reference", number(r.reference)},
                   {"tolerance_spec", r.tolerance_spec},
                   {"verdict", verdict_name(r.verdict)}});
  out << arr.dump(2) << '\n';
}

std::vector<StatReport> read_reports_json(std::istream& in) {
  const nlohmann::json arr = nlohmann::json::parse(in);
  std::vector<StatReport> out;
  for (const auto& j : arr)
    out.push_back({j.at("name").get<std::string>(), number_of(j.at("value")),
                   number_of(j.at("ci_low")), number_of(j.at("ci_high")),
                   number_of(j.at("reference")), j.at("tolerance_spec").get<std::string>(),
                   verdict_from_name(j.at("verdict").get<std::string>())});
  return out;
}

void write_samples_csv(std::ostream& out, std::span<const FluctuationSample> samples) {
  out << "t,m_raw,m_centered,m_normalized,n_mart,x_residual\n";
  const auto old = out.precision(17);
  for (const auto& s : samples)
    out << s.t << ',' << s.m_raw << ',' << s.m_centered << ',' << s.m_normalized << ','
        << s.n_mart << ',' << s.x_residual << '\n';
  out.precision(old);
}

}  // namespace sausage
