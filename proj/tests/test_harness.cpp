#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "sausage/errors.hpp"
#include "sausage/harness.hpp"
#include "sausage/rng.hpp"
#include "sausage/stats.hpp"

using namespace sausage;

namespace {

constexpr double kPi = std::numbers::pi;
const CapacityEstimate kBall1 = capacity_ball(1.0);

std::vector<double> gaussian(std::size_t n, std::uint32_t run, double sd, double mu = 0.0) {
  CounterRng r(77, run, Stream::Synthetic);
  std::vector<double> x(n);
  for (double& v : x) v = mu + sd * r.normal();
  return x;
}

std::vector<double> uniform(std::size_t n, std::uint32_t run, double sd, double mu = 0.0) {
  CounterRng r(78, run, Stream::Synthetic);
  std::vector<double> x(n);
  for (double& v : x) v = mu + sd * std::sqrt(12.0) * (r.uniform() - 0.5);
  return x;
}

double target_sd(double t) { return fluctuation_scale(kBall1.value) * std::sqrt(t * std::log(t)); }

}  // namespace

TEST_CASE("constants for the unit ball") {
  CHECK(fluctuation_scale(kBall1.value) == doctest::Approx(8.8858).epsilon(1e-4));
  CHECK(target_sd(1000.0) == doctest::Approx(738.6).epsilon(1e-3));
  CHECK(reference_mean(1000.0, kBall1.value) == doctest::Approx(6600.3).epsilon(1e-4));
}

TEST_CASE("centering") {
  const auto v = gaussian(200, 0, 700.0, 6600.0);
  const auto emp = center_samples(v, 1000.0, kBall1, Centering::EmpiricalMean);
  double sum = 0.0, scale = 0.0;
  for (const auto& s : emp) {
    sum += s.m_centered;
    scale += std::abs(s.m_raw);
  }
  CHECK(std::abs(sum) <= 1e-12 * scale);
  const auto th = center_samples(v, 1000.0, kBall1, Centering::TheoreticalMean);
  CHECK(th[0].m_centered == doctest::Approx(v[0] - reference_mean(1000.0, kBall1.value)).epsilon(1e-9));
  std::vector<double> c;
  for (const auto& s : th) c.push_back(s.m_centered);
  CHECK(std::abs(mean(c)) <= 3 * std_error_of_mean(c) + 1.0);
  CHECK(th[0].m_normalized == doctest::Approx(th[0].m_centered / target_sd(1000.0)));
  CHECK_THROWS_AS(center_samples(gaussian(29, 0, 1.0), 1000.0, kBall1, Centering::EmpiricalMean),
                  InsufficientDataError);
  CHECK_THROWS_AS(center_samples(v, 50.0, kBall1, Centering::EmpiricalMean), DomainError);
}

TEST_CASE("residual identity") {
  auto s = center_samples(gaussian(50, 1, 700.0, 6600.0), 1000.0, kBall1, Centering::EmpiricalMean);
  const auto n = gaussian(50, 2, 10.0);
  attach_martingale(s, n, kBall1);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].n_mart == n[i]);
    CHECK(s[i].x_residual == residual_of(s[i], kBall1));
    CHECK(s[i].x_residual == s[i].m_centered + (kBall1.value * kBall1.value) * n[i]);
  }
  CHECK_THROWS_AS(attach_martingale(s, gaussian(49, 2, 1.0), kBall1), MisuseError);
}

TEST_CASE("clt_report calibration") {
  const double t = 1000.0;
  int pos = 0, neg = 0;
  for (std::uint32_t run = 0; run < 20; ++run) {
    const auto good = center_samples(gaussian(300, run, target_sd(t), 6600.0), t, kBall1,
                                     Centering::EmpiricalMean);
    const StatReport r = clt_report(good, kBall1, run);
    CHECK(r.ci_low <= r.value);
    CHECK(r.value <= r.ci_high);
    if (r.verdict == Verdict::Pass) {
      ++pos;
      std::vector<double> z;
      for (const auto& s : good) z.push_back(s.m_normalized);
      CHECK(variance(z) == doctest::Approx(1.0).epsilon(0.2));
    }
    const auto bad = center_samples(uniform(3000, run, target_sd(t), 6600.0), t, kBall1,
                                    Centering::EmpiricalMean);
    if (clt_report(bad, kBall1, run).verdict == Verdict::Fail) ++neg;
  }
  CHECK(pos >= 18);
  CHECK(neg >= 18);
}

TEST_CASE("clt_report preconditions") {
  auto s = center_samples(gaussian(300, 0, 700.0, 6600.0), 1000.0, kBall1, Centering::EmpiricalMean);
  CHECK_THROWS_AS(clt_report(std::span(s).first(299), kBall1), InsufficientDataError);
  s[3].t = 2000.0;
  CHECK_THROWS_AS(clt_report(s, kBall1), MisuseError);
  auto early = center_samples(gaussian(300, 0, 700.0, 6600.0), 500.0, kBall1, Centering::EmpiricalMean);
  CHECK_THROWS_AS(clt_report(early, kBall1), DomainError);
}

TEST_CASE("residual_report controls") {
  const std::vector<double> grid{250, 500, 1000, 2000};
  const double c2 = kBall1.value * kBall1.value;
  std::vector<FluctuationSample> coupled, independent;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double t = grid[g];
    auto a = center_samples(gaussian(150, static_cast<std::uint32_t>(g), target_sd(t), 0.0), t, kBall1,
                            Centering::EmpiricalMean);
    std::vector<double> n(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) n[i] = -a[i].m_centered / c2;
    auto b = a;
    attach_martingale(a, n, kBall1);
    coupled.insert(coupled.end(), a.begin(), a.end());
    const auto m = gaussian(150, static_cast<std::uint32_t>(100 + g), target_sd(t) / c2, 0.0);
    attach_martingale(b, m, kBall1);
    independent.insert(independent.end(), b.begin(), b.end());
  }
  const StatReport good = residual_report(coupled, grid);
  CHECK(good.value == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(good.verdict == Verdict::Pass);
  const auto prof = residual_profile(independent, grid);
  for (const auto& p : prof) CHECK(p.rho == doctest::Approx(std::sqrt(2.0)).epsilon(0.2));
  CHECK(residual_report(independent, grid).verdict == Verdict::Fail);
  const std::vector<double> narrow{250, 500, 1000};
  CHECK_THROWS_AS(residual_report(coupled, narrow), InsufficientDataError);
  CHECK_THROWS_AS(residual_report(std::span(coupled).first(300), grid), InsufficientDataError);
}

TEST_CASE("LIL diagnostics") {
  Trajectory flat;
  for (int i = 0; i < 60; ++i) {
    const double t = 100.0 * std::pow(100.0, i / 59.0);
    flat.emplace_back(t, kBall1.value * t);
  }
  const auto reps = lil_diagnostic(flat, kBall1);
  REQUIRE(reps.size() == 2);
  CHECK(reps[0].value == 0.0);
  CHECK(reps[1].value == 0.0);
  CHECK(reps[0].reference == doctest::Approx(12.566).epsilon(1e-4));
  CHECK(reps[1].reference == doctest::Approx(9.8696).epsilon(1e-4));
  for (const auto& r : reps) CHECK(r.verdict == Verdict::Diagnostic);
  Trajectory short_run(flat.begin(), flat.begin() + 40);
  CHECK_THROWS_AS(lil_statistics(short_run, kBall1), InsufficientDataError);
}

TEST_CASE("ASCLT diagnostics calibrate on i.i.d. Gaussian input") {
  int below = 0;
  for (std::uint32_t run = 0; run < 50; ++run) {
    CounterRng r(79, run, Stream::Synthetic);
    Trajectory tr;
    for (int i = 0; i < 200; ++i) {
      const double t = 100.0 * std::pow(100.0, i / 199.0);
      tr.emplace_back(t, kBall1.value * t + target_sd(t) * r.normal());
    }
    const WeightedSample w = asclt_sample(tr, kBall1);
    double total = 0.0;
    for (double x : w.weights) total += x;
    CHECK(total == doctest::Approx(1.0));
    const StatReport rep = asclt_diagnostic(tr, kBall1);
    CHECK(rep.verdict == Verdict::Diagnostic);
    if (rep.value < rep.reference) ++below;
  }
  CHECK(below >= 45);
}

TEST_CASE("empirical L^p norms") {
  CHECK(empirical_lp(std::vector<double>(30, -2.5), 3.0) == doctest::Approx(2.5));
  std::vector<double> pm;
  for (int i = 0; i < 30; ++i) pm.push_back(i % 2 ? 1.0 : -1.0);
  CHECK(empirical_lp(pm, 2.0) == doctest::Approx(1.0));
  CHECK(empirical_lp(gaussian(10000, 5, 1.0), 4.0) == doctest::Approx(std::pow(3.0, 0.25)).epsilon(0.1));
  CHECK_THROWS_AS(empirical_lp(pm, 0.5), DomainError);
  CHECK_THROWS_AS(empirical_lp(std::vector<double>(10, 1.0), 2.0), InsufficientDataError);
}

TEST_CASE("multi-shape coupling") {
  const double t = 1000.0;
  const CapacityEstimate half = capacity_ball(0.5);
  const auto v = gaussian(120, 6, target_sd(t), 6600.0);
  const auto a = center_samples(v, t, kBall1, Centering::EmpiricalMean);
  std::vector<std::uint32_t> reps(v.size());
  for (std::size_t i = 0; i < reps.size(); ++i) reps[i] = static_cast<std::uint32_t>(i);

  const StatReport same = multi_shape_coupling(a, a, reps, reps, kBall1, kBall1);
  CHECK(same.value == doctest::Approx(1.0));
  CHECK(same.verdict == Verdict::Pass);

  const auto noise = gaussian(120, 7, 0.02 * target_sd(t));
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = v[i] / 4.0 + noise[i];
  const auto b = center_samples(w, t, half, Centering::EmpiricalMean);
  const StatReport quarter = multi_shape_coupling(a, b, reps, reps, kBall1, half);
  CHECK(quarter.reference == doctest::Approx(4.0));
  CHECK(quarter.value == doctest::Approx(4.0).epsilon(0.05));
  CHECK(quarter.verdict == Verdict::Pass);

  const auto c = center_samples(gaussian(120, 8, target_sd(t) / 4, 1650.0), t, half, Centering::EmpiricalMean);
  const CouplingStatistics cs = coupling_statistics(a, c);
  CHECK(std::abs(cs.correlation) <= 3.0 / std::sqrt(120.0));
  CHECK(multi_shape_coupling(a, c, reps, reps, kBall1, half).verdict == Verdict::Fail);

  auto shifted = reps;
  shifted[5] = 999;
  CHECK_THROWS_AS(multi_shape_coupling(a, b, reps, shifted, kBall1, half), MisuseError);
  CHECK_THROWS_AS(multi_shape_coupling(std::span(a).first(99), std::span(b).first(99),
                                       std::span(reps).first(99), std::span(reps).first(99), kBall1, half),
                  InsufficientDataError);
}

TEST_CASE("report JSON round trip") {
  std::vector<StatReport> in{{"a", 1.5, 1.0, 2.0, 1.2, "rule", Verdict::Pass},
                             {"b", std::nan(""), 0.0, 0.0, 0.0, "diag", Verdict::Diagnostic}};
  std::stringstream buf;
  write_reports_json(buf, in);
  CHECK(buf.str().find("null") != std::string::npos);
  const auto out = read_reports_json(buf);
  REQUIRE(out.size() == 2);
  CHECK(out[0].name == "a");
  CHECK(out[0].value == 1.5);
  CHECK(out[0].verdict == Verdict::Pass);
  CHECK(std::isnan(out[1].value));
  CHECK(out[1].verdict == Verdict::Diagnostic);
  CHECK_THROWS_AS(verdict_from_name("Maybe"), ConfigError);
}

TEST_CASE("fluctuation CSV header") {
  std::ostringstream out;
  write_samples_csv(out, std::vector<FluctuationSample>(1));
  CHECK(out.str().rfind("t,m_raw,m_centered,m_normalized,n_mart,x_residual\n", 0) == 0);
}
