#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sausage/capacity.hpp"

namespace sausage {

// One replica's sausage-volume fluctuation at time t, with the martingale
// N_t of the same path and the residual X_t = m_centered + C²·N_t.
struct FluctuationSample {
  double t = 0.0;
  double m_raw = 0.0;
  double m_centered = 0.0;
  double m_normalized = 0.0;  // π√2 · m_centered / (C² √(t log t))
  double n_mart = 0.0;
  double x_residual = 0.0;
};

enum class Verdict { Pass, Fail, Diagnostic };
const char* verdict_name(Verdict v);
Verdict verdict_from_name(const std::string& s);

struct StatReport {
  std::string name;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double reference = 0.0;
  std::string tolerance_spec;
  Verdict verdict = Verdict::Diagnostic;
};

enum class Centering { TheoreticalMean, EmpiricalMean };

// Mean volume C t + (4/(2π)^{3/2}) C² √t, truncated after the √t term.
double reference_mean(double t, double capacity);
// Fluctuation scale C²/(π√2) of (m - E m)/√(t log t).
double fluctuation_scale(double capacity);

// Centers one replica ensemble at time t. n_mart and x_residual are left at
// 0 and m_centered until attach_martingale is called.
std::vector<FluctuationSample> center_samples(std::span<const double> volumes, double t,
                                              const CapacityEstimate& cap, Centering mode);
// Stores N_t for each sample and recomputes x_residual.
void attach_martingale(std::vector<FluctuationSample>& samples, std::span<const double> n_mart,
                       const CapacityEstimate& cap);
double residual_of(const FluctuationSample& s, const CapacityEstimate& cap);

// Gaussian-fluctuation test at a common t: KS of m_normalized against N(0,1)
// at level 0.01, and the std of m_centered/√(t log t) within 20% of C²/(π√2).
StatReport clt_report(std::span<const FluctuationSample> samples, const CapacityEstimate& cap,
                      std::uint64_t bootstrap_seed = 1);

struct ResidualPoint {
  double t = 0.0;
  double rho = 0.0;
  double band_low = 0.0;   // 3σ bootstrap band
  double band_high = 0.0;
  std::size_t replicas = 0;
};
// ρ(t) = ‖X_t‖₂ / ‖m_centered‖₂ per grid time, with 3σ bootstrap bands.
std::vector<ResidualPoint> residual_profile(std::span<const FluctuationSample> samples,
                                            std::span<const double> t_grid,
                                            std::uint64_t bootstrap_seed = 1);
// Pass iff ρ is non-increasing within the bands and ρ(t_max) <= 0.5.
StatReport residual_report(std::span<const FluctuationSample> samples,
                           std::span<const double> t_grid, std::uint64_t bootstrap_seed = 1);

using Trajectory = std::vector<std::pair<double, double>>;  // (t, m_raw)

struct LilStatistics {
  double limsup = 0.0;  // sup (m - Ct)/√(t log t log log t)
  double chung = 0.0;   // √(log log T/(T log T)) · sup_{s≤T} |m - Cs|
};
LilStatistics lil_statistics(const Trajectory& traj, const CapacityEstimate& cap);
// Both statistics as Diagnostic reports, against C²/π and C²/4.
std::vector<StatReport> lil_diagnostic(const Trajectory& traj, const CapacityEstimate& cap);

struct WeightedSample {
  std::vector<double> values;   // M_t(1) at each checkpoint
  std::vector<double> weights;  // Δt/t normalized to sum 1
};
WeightedSample asclt_sample(const Trajectory& traj, const CapacityEstimate& cap);
double weighted_ks_normal(const WeightedSample& w);
// KS distance of the log-weighted law of M_t(1) to N(0,1); Diagnostic.
StatReport asclt_diagnostic(const Trajectory& traj, const CapacityEstimate& cap);

double empirical_lp(std::span<const double> samples, double p);

// Coupling of two shapes on shared paths: Pearson correlation of m_centered
// pairs and the regression slope of a on b.
struct CouplingStatistics {
  double correlation = 0.0;
  double slope = 0.0;
};
CouplingStatistics coupling_statistics(std::span<const FluctuationSample> a,
                                       std::span<const FluctuationSample> b);
// Pass iff correlation >= 0.9 and slope within 25% of C_a²/C_b². Replica
// indices must match pairwise.
StatReport multi_shape_coupling(std::span<const FluctuationSample> a,
                                std::span<const FluctuationSample> b,
                                std::span<const std::uint32_t> replicas_a,
                                std::span<const std::uint32_t> replicas_b,
                                const CapacityEstimate& cap_a, const CapacityEstimate& cap_b);

void write_reports_json(std::ostream& out, std::span<const StatReport> reports);
std::vector<StatReport> read_reports_json(std::istream& in);
// CSV with header `t,m_raw,m_centered,m_normalized,n_mart,x_residual`.
void write_samples_csv(std::ostream& out, std::span<const FluctuationSample> samples);

}  // namespace sausage
