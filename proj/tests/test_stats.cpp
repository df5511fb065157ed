#include <cmath>
#include <vector>

#include "doctest.h"
#include "sausage/errors.hpp"
#include "sausage/rng.hpp"
#include "sausage/stats.hpp"

using namespace sausage;

TEST_CASE("moments and correlation") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(mean(x) == doctest::Approx(2.5));
  CHECK(variance(x) == doctest::Approx(5.0 / 3.0));
  CHECK(std_error_of_mean(x) == doctest::Approx(std::sqrt(5.0 / 12.0)));
  const std::vector<double> y{2, 4, 6, 8}, z{8, 6, 4, 2};
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(pearson(x, z) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(mean(std::vector<double>{}), InsufficientDataError);
  CHECK_THROWS_AS(variance(std::vector<double>{1.0}), InsufficientDataError);
}

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-9));
  CHECK(normal_cdf(-3.0) == doctest::Approx(0.0013498980).epsilon(1e-7));
}

TEST_CASE("Kolmogorov distribution tables") {
  CHECK(kolmogorov_tail(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_tail(1.6276) == doctest::Approx(0.01).epsilon(2e-3));
  // Exact small-sample critical values.
  CHECK(ks_pvalue(10, 0.40925) == doctest::Approx(0.05).epsilon(2e-3));
  CHECK(ks_pvalue(20, 0.35241) == doctest::Approx(0.01).epsilon(5e-3));
  CHECK(ks_critical_value(10, 0.05) == doctest::Approx(0.40925).epsilon(1e-3));
  CHECK(ks_pvalue(100, 0.0) == doctest::Approx(1.0));
  CHECK(ks_pvalue(1000, 0.5) < 1e-100);
}

TEST_CASE("KS statistic on a known sample") {
  const std::vector<double> x{0.1, 0.4, 0.7};
  const double d = ks_statistic(x, [](double v) { return v; });
  CHECK(d == doctest::Approx(0.3));
}

TEST_CASE("KS calibration on Gaussian samples") {
  int accepted = 0;
  for (std::uint32_t run = 0; run < 100; ++run) {
    CounterRng r(3, run, Stream::Synthetic);
    std::vector<double> x(300);
    for (double& v : x) v = r.normal();
    if (ks_pvalue(x.size(), ks_statistic(x, normal_cdf)) >= 0.01) ++accepted;
  }
  CHECK(accepted >= 95);
}

TEST_CASE("two-sample KS") {
  CounterRng r(4, 0, Stream::Synthetic);
  std::vector<double> a(500), b(500), c(500);
  for (double& v : a) v = r.normal();
  for (double& v : b) v = r.normal();
  for (double& v : c) v = r.normal() + 0.5;
  CHECK(ks_two_sample(a, a).statistic == 0.0);
  CHECK(ks_two_sample(a, a).p_value == doctest::Approx(1.0));
  CHECK(ks_two_sample(a, b).p_value > 0.01);
  CHECK(ks_two_sample(a, c).p_value < 1e-6);
}

TEST_CASE("linear fit") {
  const std::vector<double> x{0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double v : x) y.push_back(1.5 + 2.0 * v);
  const LinearFit f = linear_fit(x, y);
  CHECK(f.intercept == doctest::Approx(1.5));
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.slope_se == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(linear_fit(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), DomainError);
}

TEST_CASE("bootstrap is seeded and resamples with replacement") {
  const std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  auto stat = [&](std::span<const std::size_t> idx) {
    double s = 0;
    for (auto i : idx) s += x[i];
    return s / static_cast<double>(idx.size());
  };
  const auto a = bootstrap(x.size(), 1000, 9, stat);
  const auto b = bootstrap(x.size(), 1000, 9, stat);
  CHECK(a == b);
  CHECK(a.size() == 1000);
  CHECK(mean(a) == doctest::Approx(5.5).epsilon(0.02));
  CHECK(std::sqrt(variance(a)) == doctest::Approx(std::sqrt(8.25 / 10.0)).epsilon(0.1));
}

TEST_CASE("quantile interpolates") {
  CHECK(quantile({3, 1, 2}, 0.5) == doctest::Approx(2.0));
  CHECK(quantile({0, 10}, 0.25) == doctest::Approx(2.5));
  CHECK(quantile({4}, 0.9) == 4.0);
}
