#include "sausage/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sausage/errors.hpp"
#include "sausage/rng.hpp"

namespace sausage {

double mean(std::span<const double> x) {
  if (x.empty()) throw InsufficientDataError("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw InsufficientDataError("variance needs two samples");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double std_error_of_mean(std::span<const double> x) {
  return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InsufficientDataError("pearson: bad sizes");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return sxx == syy && sxx == 0.0 ? 1.0 : 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double ks_statistic(std::span<const double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw InsufficientDataError("ks_statistic: empty sample");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

namespace {

// Matrix with a shared power-of-two exponent to avoid overflow.
struct ScaledMatrix {
  std::size_t m;
  std::vector<double> a;
  int exponent = 0;
};

ScaledMatrix multiply(const ScaledMatrix& x, const ScaledMatrix& y) {
  const std::size_t m = x.m;
  ScaledMatrix r{m, std::vector<double>(m * m, 0.0), x.exponent + y.exponent};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < m; ++k) {
      const double xik = x.a[i * m + k];
      if (xik == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) r.a[i * m + j] += xik * y.a[k * m + j];
    }
  const std::size_t mid = (m / 2) * m + m / 2;
  if (r.a[mid] > 1e140) {
    for (double& v : r.a) v *= 1e-140;
    r.exponent += 140;
  }
  return r;
}

ScaledMatrix power(const ScaledMatrix& h, std::size_t n) {
  if (n == 1) return h;
  ScaledMatrix half = power(h, n / 2);
  ScaledMatrix sq = multiply(half, half);
  return n % 2 == 0 ? sq : multiply(h, sq);
}

}  // namespace

double ks_pvalue(std::size_t n, double d) {
  if (n == 0) throw InsufficientDataError("ks_pvalue: n = 0");
  if (d <= 0.0) return 1.0;
  if (d >= 1.0) return 0.0;
  const double nd = static_cast<double>(n) * d;
  // The exact recursion is costly for large n·d², where the asymptotic
  // series is already accurate to many digits.
  if (static_cast<double>(n) * d * d > 18.0 || n > 100000) return kolmogorov_tail(std::sqrt(static_cast<double>(n)) * d);
  const auto k = static_cast<std::size_t>(nd) + 1;
  const std::size_t m = 2 * k - 1;
  const double hh = static_cast<double>(k) - nd;
  ScaledMatrix h{m, std::vector<double>(m * m, 0.0), 0};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) h.a[i * m + j] = (i + 1 >= j) ? 1.0 : 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    h.a[i * m] -= std::pow(hh, static_cast<double>(i + 1));
    h.a[(m - 1) * m + i] -= std::pow(hh, static_cast<double>(m - i));
  }
  h.a[(m - 1) * m] += (2.0 * hh - 1.0 > 0.0) ? std::pow(2.0 * hh - 1.0, static_cast<double>(m)) : 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i + 1 >= j)
        for (std::size_t g = 1; g <= i + 1 - j; ++g) h.a[i * m + j] /= static_cast<double>(g);
  ScaledMatrix q = power(h, n);
  double s = q.a[(k - 1) * m + (k - 1)];
  int e = q.exponent;
  for (std::size_t i = 1; i <= n; ++i) {
    s *= static_cast<double>(i) / static_cast<double>(n);
    if (s < 1e-140) {
      s *= 1e140;
      e -= 140;
    }
  }
  const double cdf = s * std::pow(10.0, e);
  return std::clamp(1.0 - cdf, 0.0, 1.0);
}

double ks_critical_value(std::size_t n, double alpha) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ks_pvalue(n, mid) > alpha ? lo : hi) = mid;
  }
  return hi;
}

double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsTwoSample ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InsufficientDataError("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  const double ne = nx * ny / (nx + ny);
  const double se = std::sqrt(ne);
  return {d, kolmogorov_tail((se + 0.12 + 0.11 / se) * d)};
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw InsufficientDataError("linear_fit: need >= 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("linear_fit: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    rss += r * r;
  }
  const double s2 = rss / (n - 2.0);
  f.slope_se = std::sqrt(s2 / sxx);
  f.intercept_se = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  return f;
}

std::vector<double> bootstrap(std::size_t n, std::size_t n_resamples, std::uint64_t seed,
                              const std::function<double(std::span<const std::size_t>)>& stat) {
  if (n == 0) throw InsufficientDataError("bootstrap: empty sample");
  CounterRng rng(seed, 0, Stream::Bootstrap);
  std::vector<double> out(n_resamples);
  std::vector<std::size_t> idx(n);
  for (std::size_t r = 0; r < n_resamples; ++r) {
    for (auto& i : idx) i = rng.below(n);
    out[r] = stat(idx);
  }
  return out;
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw InsufficientDataError("quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

}  // namespace sausage
