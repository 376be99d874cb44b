#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sopbound::volume {

/// Weighted sample set of the secrecy rate. Weights are optional; when
/// present they are non-negative and sum to one.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> samples);
  EmpiricalDistribution(std::vector<double> samples, std::vector<double> weights);

  std::span<const double> samples() const { return samples_; }
  bool weighted() const { return !weights_.empty(); }
  double weight(std::size_t i) const;
  std::size_t size() const { return samples_.size(); }

  double mean() const;
  double min() const;
  double max() const;

 private:
  std::vector<double> samples_;
  std::vector<double> weights_;
};

/// Strictly increasing, non-empty set of thresholds {lambda_1 < ... < lambda_n}.
class ThresholdSet {
 public:
  explicit ThresholdSet(std::vector<double> thresholds);
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

enum class EntropyEstimator { kHistogram, kSpacing };

struct VolumeEstimate {
  double entropy;  // nats; -inf for degenerate samples
  double volume;   // exp(entropy)
  double standard_error;  // of the volume, delta method
  EntropyEstimator estimator;
};

/// lhs <= rhs comparison with the tolerance that was applied.
struct BoundReport {
  double lhs;
  double rhs;
  bool holds;
  double slack;  // rhs - lhs
  double tolerance;
};

/// Absolute tolerance used by every "holds" decision.
inline constexpr double kBoundTolerance = 1e-9;

BoundReport make_report(double lhs, double rhs, double tolerance = kBoundTolerance);

double empirical_sop(const EmpiricalDistribution& dist, double lambda);

/// Fraction of draws with snr_b / snr_e < 2^{r_s}.
double traditional_sop(std::span<const double> snr_b, std::span<const double> snr_e, double r_s);

/// Weighted mean of exp(t * lambda). Throws NumericalError on overflow.
double mgf(const EmpiricalDistribution& dist, double t);

/// E{L} <= (E{e^{tL}} - 1) / t.
BoundReport expectation_bound(const EmpiricalDistribution& dist, double t);

/// e^{t lambda} Pr(L >= lambda) <= E{e^{tL}}; the slack is the equality gap.
BoundReport chernoff_relation(const EmpiricalDistribution& dist, double t, double lambda);

VolumeEstimate volume_of(const EmpiricalDistribution& dist,
                         EntropyEstimator estimator = EntropyEstimator::kSpacing);
VolumeEstimate volume_of(std::span<const double> samples,
                         EntropyEstimator estimator = EntropyEstimator::kSpacing);

/// Mean per-batch volume (lhs) against the pooled-mixture volume (rhs), so
/// the report keeps the lhs <= rhs orientation. The tolerance is 3 standard
/// errors of the difference plus kBoundTolerance.
BoundReport vitale_check(std::span<const std::vector<double>> batches,
                         EntropyEstimator estimator = EntropyEstimator::kSpacing);

struct DualObjective {
  double product_form;              // sum over thresholds of e^{t l} Pr(L >= l)
  std::optional<double> sum_form;   // trapezoid integrals over the span of the thresholds
  std::optional<BoundReport> report;  // max product term against sum_form
};

DualObjective dual_objective(const EmpiricalDistribution& dist, const ThresholdSet& thresholds,
                             double t);

/// 1 - e^{-rho^2} / Pr(L >= 0), clamped to [0, 1].
double talagrand_bound(const EmpiricalDistribution& dist, double rho);

/// e^{-rho^2} / p.
double sop_convex_bound(double rho, double p);

enum class GreedyObjective {
  kExpectedVolume,  // sum of e^{t l} Pr(L >= l) over the threshold set
  kSopVolumeProxy   // exp of the entropy of the partition the thresholds induce
};

std::string_view to_string(GreedyObjective objective);
GreedyObjective parse_objective(std::string_view name);

struct GreedyOptions {
  std::size_t grid_points = 64;
  std::size_t max_iters = 100;
  double t = 1.0;  // exponent for kExpectedVolume
};

/// One greedy iteration: the set after the iteration, its objective value
/// and the cumulative number of objective evaluations so far.
struct GreedyStep {
  std::vector<double> thresholds;
  double objective;
  std::size_t evaluations;
};

struct GreedyResult {
  ThresholdSet thresholds;
  double objective;
  std::vector<GreedyStep> history;  // history[0] is the initial set
};

/// Candidate grid: up to `points` distinct sample quantiles, ascending.
std::vector<double> quantile_grid(const EmpiricalDistribution& dist, std::size_t points);

/// Objective value of a threshold subset, shared by the greedy search and
/// by the exhaustive reference used in tests.
double threshold_objective(const EmpiricalDistribution& dist, std::span<const double> thresholds,
                           GreedyObjective objective, double t);

GreedyResult greedy_threshold_search(const EmpiricalDistribution& dist, std::size_t n,
                                     GreedyObjective objective, const GreedyOptions& options = {});

/// Same search on an explicit candidate grid (ascending, distinct).
GreedyResult greedy_threshold_search(const EmpiricalDistribution& dist,
                                     std::span<const double> grid, std::size_t n,
                                     GreedyObjective objective, const GreedyOptions& options = {});

}  // namespace sopbound::volume
