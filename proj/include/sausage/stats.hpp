#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace sausage {

double mean(std::span<const double> x);
// Unbiased sample variance (n - 1 denominator).
double variance(std::span<const double> x);
double std_error_of_mean(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);

double normal_cdf(double x);

// Kolmogorov–Smirnov distance between the empirical law of x and `cdf`.
double ks_statistic(std::span<const double> x, const std::function<double(double)>& cdf);
// Exact P(D_n >= d) for the one-sample statistic (Marsaglia–Tsang–Wang).
double ks_pvalue(std::size_t n, double d);
// Smallest d with ks_pvalue(n, d) <= alpha.
double ks_critical_value(std::size_t n, double alpha);
// Asymptotic Kolmogorov tail P(K > lambda).
double kolmogorov_tail(double lambda);

struct KsTwoSample {
  double statistic = 0.0;
  double p_value = 0.0;  // asymptotic, with the Stephens small-sample correction
};
KsTwoSample ks_two_sample(std::span<const double> a, std::span<const double> b);

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double intercept_se = 0.0;
  double slope_se = 0.0;
};
// Ordinary least squares y = intercept + slope·x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// Statistics of `n_resamples` seeded bootstrap resamples of indices 0..n-1.
std::vector<double> bootstrap(std::size_t n, std::size_t n_resamples, std::uint64_t seed,
                              const std::function<double(std::span<const std::size_t>)>& stat);

// Empirical quantile with linear interpolation; q in [0, 1].
double quantile(std::vector<double> x, double q);

}  // namespace sausage
