#include "sopbound/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sopbound/error.hpp"

namespace sopbound::volume {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kMinSpacingSamples = 32;
// Largest argument that exp() can take without overflowing a double.
constexpr double kMaxExpArgument = 709.0;

double checked_exp(double x, const char* what) {
  if (x > kMaxExpArgument) {
    throw NumericalError(std::string(what) + ": exp overflow (argument " + std::to_string(x) + ")");
  }
  return std::exp(x);
}

struct EntropyResult {
  double entropy;
  double entropy_se;
};

EntropyResult spacing_entropy(std::vector<double> x) {
  const std::size_t n = x.size();
  if (n < kMinSpacingSamples) {
    throw DomainError("spacing estimator needs at least 32 samples, got " + std::to_string(n));
  }
  std::sort(x.begin(), x.end());
  if (x.front() == x.back()) return {kNegInf, 0.0};
  const auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const double scale = static_cast<double>(n) / (2.0 * static_cast<double>(m));
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = x[std::min(i + m, n - 1)];
    const double lo = x[i >= m ? i - m : 0];
    const double spacing = hi - lo;
    if (spacing <= 0.0) return {kNegInf, 0.0};  // an atom: no density
    const double term = std::log(scale * spacing);
    sum += term;
    sum_sq += term * term;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

EntropyResult histogram_entropy(std::span<const double> samples, const EmpiricalDistribution* dist) {
  const std::size_t n = samples.size();
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (lo == hi) return {kNegInf, 0.0};
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    return k + 1 < n ? sorted[k] * (1.0 - frac) + sorted[k + 1] * frac : sorted[k];
  };
  double width = 2.0 * (quantile(0.75) - quantile(0.25)) * std::cbrt(1.0 / static_cast<double>(n));
  if (!(width > 0.0)) width = (hi - lo) / std::sqrt(static_cast<double>(n));
  const auto bins = static_cast<std::size_t>(std::ceil((hi - lo) / width)) + 1;
  std::vector<double> mass(bins, 0.0);
  const auto bin_of = [&](double v) {
    return std::min(bins - 1, static_cast<std::size_t>((v - lo) / width));
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double w = dist != nullptr ? dist->weight(i) : 1.0 / static_cast<double>(n);
    mass[bin_of(samples[i])] += w;
  }
  double h = 0.0;
  double h_sq = 0.0;
  for (double p : mass) {
    if (p <= 0.0) continue;
    const double surprisal = -std::log(p / width);
    h += p * surprisal;
    h_sq += p * surprisal * surprisal;
  }
  const double var = std::max(0.0, h_sq - h * h);
  return {h, std::sqrt(var / static_cast<double>(n))};
}

VolumeEstimate finish(EntropyResult r, EntropyEstimator estimator) {
  if (r.entropy == kNegInf) return {kNegInf, 0.0, 0.0, estimator};
  const double volume = std::exp(r.entropy);
  return {r.entropy, volume, volume * r.entropy_se, estimator};
}

}  // namespace

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples)
    : samples_(std::move(samples)) {
  if (samples_.empty()) throw DomainError("empirical distribution needs at least one sample");
  for (double v : samples_) {
    if (!std::isfinite(v)) throw DomainError("empirical distribution samples must be finite");
  }
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples, std::vector<double> weights)
    : EmpiricalDistribution(std::move(samples)) {
  if (weights.size() != samples_.size()) throw DimensionError("weights and samples differ in length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weights must be finite and non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("weights must sum to 1");
  weights_ = std::move(weights);
}

double EmpiricalDistribution::weight(std::size_t i) const {
  return weights_.empty() ? 1.0 / static_cast<double>(samples_.size()) : weights_[i];
}

double EmpiricalDistribution::mean() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < samples_.size(); ++i) acc += weight(i) * samples_[i];
  return acc;
}

double EmpiricalDistribution::min() const { return *std::min_element(samples_.begin(), samples_.end()); }
double EmpiricalDistribution::max() const { return *std::max_element(samples_.begin(), samples_.end()); }

ThresholdSet::ThresholdSet(std::vector<double> thresholds) : values_(std::move(thresholds)) {
  if (values_.empty()) throw DomainError("threshold set must not be empty");
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (!(values_[i] > values_[i - 1])) throw DomainError("thresholds must be strictly increasing");
  }
}

BoundReport make_report(double lhs, double rhs, double tolerance) {
  return {lhs, rhs, lhs <= rhs + tolerance, rhs - lhs, tolerance};
}

double empirical_sop(const EmpiricalDistribution& dist, double lambda) {
  const auto samples = dist.samples();
  if (!dist.weighted()) {
    const auto hits = std::count_if(samples.begin(), samples.end(), [&](double x) { return x >= lambda; });
    return static_cast<double>(hits) / static_cast<double>(samples.size());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i] >= lambda) acc += dist.weight(i);
  }
  return std::clamp(acc, 0.0, 1.0);
}

double traditional_sop(std::span<const double> snr_b, std::span<const double> snr_e, double r_s) {
  if (snr_b.size() != snr_e.size()) throw DimensionError("SNR sample vectors differ in length");
  if (snr_b.empty()) throw DimensionError("SNR sample vectors are empty");
  const double limit = std::exp2(r_s);
  std::size_t below = 0;
  for (std::size_t i = 0; i < snr_b.size(); ++i) {
    if (!(snr_b[i] > 0.0) || !(snr_e[i] > 0.0)) throw DomainError("SNR samples must be positive");
    if (snr_b[i] / snr_e[i] < limit) ++below;
  }
  return static_cast<double>(below) / static_cast<double>(snr_b.size());
}

double mgf(const EmpiricalDistribution& dist, double t) {
  if (!std::isfinite(t)) throw DomainError("mgf argument t must be finite");
  const auto samples = dist.samples();
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    acc += dist.weight(i) * checked_exp(t * samples[i], "mgf");
  }
  return acc;
}

BoundReport expectation_bound(const EmpiricalDistribution& dist, double t) {
  if (!(t > 0.0)) throw DomainError("expectation_bound requires t > 0");
  return make_report(dist.mean(), (mgf(dist, t) - 1.0) / t);
}

BoundReport chernoff_relation(const EmpiricalDistribution& dist, double t, double lambda) {
  if (!(t > 0.0)) throw DomainError("chernoff_relation requires t > 0");
  const double tail = empirical_sop(dist, lambda);
  const double lhs = tail > 0.0 ? checked_exp(t * lambda, "chernoff_relation") * tail : 0.0;
  return make_report(lhs, mgf(dist, t));
}

VolumeEstimate volume_of(std::span<const double> samples, EntropyEstimator estimator) {
  if (samples.empty()) throw DomainError("volume_of needs samples");
  if (estimator == EntropyEstimator::kSpacing) {
    return finish(spacing_entropy({samples.begin(), samples.end()}), estimator);
  }
  return finish(histogram_entropy(samples, nullptr), estimator);
}

VolumeEstimate volume_of(const EmpiricalDistribution& dist, EntropyEstimator estimator) {
  if (estimator == EntropyEstimator::kSpacing) {
    if (dist.weighted()) throw DomainError("spacing estimator needs unweighted samples");
    return volume_of(dist.samples(), estimator);
  }
  return finish(histogram_entropy(dist.samples(), &dist), estimator);
}

BoundReport vitale_check(std::span<const std::vector<double>> batches, EntropyEstimator estimator) {
  if (batches.size() < 2) throw DomainError("vitale_check needs at least two batches");
  std::vector<double> pooled;
  double mean_volume = 0.0;
  double mean_var = 0.0;
  for (const auto& batch : batches) {
    const VolumeEstimate v = volume_of(batch, estimator);
    mean_volume += v.volume;
    mean_var += v.standard_error * v.standard_error;
    pooled.insert(pooled.end(), batch.begin(), batch.end());
  }
  const auto k = static_cast<double>(batches.size());
  mean_volume /= k;
  mean_var /= k * k;
  const VolumeEstimate pooled_volume = volume_of(pooled, estimator);
  const double se =
      std::sqrt(mean_var + pooled_volume.standard_error * pooled_volume.standard_error);
  return make_report(mean_volume, pooled_volume.volume, kBoundTolerance + 3.0 * se);
}

DualObjective dual_objective(const EmpiricalDistribution& dist, const ThresholdSet& thresholds,
                             double t) {
  if (!(t > 0.0)) throw DomainError("dual_objective requires t > 0");
  const auto grid = thresholds.values();
  DualObjective out{0.0, std::nullopt, std::nullopt};
  double best_term = 0.0;
  std::vector<double> exp_terms(grid.size());
  std::vector<double> tails(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    exp_terms[i] = checked_exp(t * grid[i], "dual_objective");
    tails[i] = empirical_sop(dist, grid[i]);
    const double term = exp_terms[i] * tails[i];
    out.product_form += term;
    best_term = std::max(best_term, term);
  }
  if (grid.size() >= 2) {
    double integral = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double h = grid[i] - grid[i - 1];
      integral += 0.5 * h * (exp_terms[i] + exp_terms[i - 1]);
      integral += 0.5 * h * (tails[i] + tails[i - 1]);
    }
    out.sum_form = integral;
    out.report = make_report(best_term, integral);
  }
  return out;
}

double talagrand_bound(const EmpiricalDistribution& dist, double rho) {
  if (!(rho >= 0.0)) throw DomainError("talagrand_bound requires rho >= 0");
  const double p = empirical_sop(dist, 0.0);
  if (p <= 0.0) throw DomainError("talagrand_bound undefined: Pr(L >= 0) is zero");
  return std::clamp(1.0 - std::exp(-rho * rho) / p, 0.0, 1.0);
}

double sop_convex_bound(double rho, double p) {
  if (!(p > 0.0) || p > 1.0) throw DomainError("sop_convex_bound requires p in (0, 1]");
  return std::exp(-rho * rho) / p;
}

std::string_view to_string(GreedyObjective objective) {
  return objective == GreedyObjective::kExpectedVolume ? "expected-volume" : "sop-volume-proxy";
}

GreedyObjective parse_objective(std::string_view name) {
  if (name == "expected-volume") return GreedyObjective::kExpectedVolume;
  if (name == "sop-volume-proxy") return GreedyObjective::kSopVolumeProxy;
  throw DomainError("unknown greedy objective '" + std::string(name) + "'");
}

std::vector<double> quantile_grid(const EmpiricalDistribution& dist, std::size_t points) {
  if (points == 0) throw DomainError("quantile grid needs at least one point");
  std::vector<double> sorted(dist.samples().begin(), dist.samples().end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> grid;
  grid.reserve(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double q = points == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(points - 1);
    const auto idx = static_cast<std::size_t>(std::llround(q * static_cast<double>(n - 1)));
    grid.push_back(sorted[idx]);
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

namespace {

// Objective from precomputed tails[i] = Pr(L >= thresholds[i]).
double objective_from_tails(std::span<const double> thresholds, std::span<const double> tails,
                            GreedyObjective objective, double t) {
  if (objective == GreedyObjective::kExpectedVolume) {
    double acc = 0.0;
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      acc += checked_exp(t * thresholds[i], "threshold_objective") * tails[i];
    }
    return acc;
  }
  // Masses of the cells (-inf, l1), [l1, l2), ..., [ln, inf).
  double entropy = 0.0;
  double upper_tail = 1.0;
  for (std::size_t i = 0; i <= tails.size(); ++i) {
    const double tail = i < tails.size() ? tails[i] : 0.0;
    const double p = upper_tail - tail;
    if (p > 0.0) entropy -= p * std::log(p);
    upper_tail = tail;
  }
  return std::exp(entropy);
}

}  // namespace

double threshold_objective(const EmpiricalDistribution& dist, std::span<const double> thresholds,
                           GreedyObjective objective, double t) {
  std::vector<double> tails;
  for (double l : thresholds) tails.push_back(empirical_sop(dist, l));
  return objective_from_tails(thresholds, tails, objective, t);
}

GreedyResult greedy_threshold_search(const EmpiricalDistribution& dist,
                                     std::span<const double> grid, std::size_t n,
                                     GreedyObjective objective, const GreedyOptions& options) {
  if (n == 0) throw DomainError("greedy search needs n >= 1");
  if (n > grid.size()) {
    throw DomainError("requested " + std::to_string(n) + " thresholds but only " +
                      std::to_string(grid.size()) + " distinct grid points exist");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw DomainError("candidate grid must be strictly increasing");
  }

  // The state is a sorted list of grid indices; start from the n lowest.
  std::vector<std::size_t> chosen(n);
  std::iota(chosen.begin(), chosen.end(), 0);
  std::size_t evaluations = 0;
  std::vector<double> grid_tails;
  for (double g : grid) grid_tails.push_back(empirical_sop(dist, g));
  std::vector<double> values;
  std::vector<double> tails;
  const auto evaluate = [&](const std::vector<std::size_t>& idx) {
    values.clear();
    tails.clear();
    for (std::size_t i : idx) {
      values.push_back(grid[i]);
      tails.push_back(grid_tails[i]);
    }
    ++evaluations;
    return objective_from_tails(values, tails, objective, options.t);
  };
  const auto as_values = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> v;
    for (std::size_t i : idx) v.push_back(grid[i]);
    return v;
  };

  double current = evaluate(chosen);
  std::vector<GreedyStep> history{{as_values(chosen), current, evaluations}};

  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    // Best single replacement; candidates are visited in lexicographic order
    // of the resulting set so ties resolve toward the smallest thresholds.
    std::vector<std::size_t> best = chosen;
    double best_value = current;
    for (std::size_t pos = 0; pos < n; ++pos) {
      for (std::size_t g = 0; g < grid.size(); ++g) {
        if (std::find(chosen.begin(), chosen.end(), g) != chosen.end()) continue;
        std::vector<std::size_t> candidate = chosen;
        candidate[pos] = g;
        std::sort(candidate.begin(), candidate.end());
        const double value = evaluate(candidate);
        const bool tie_break = value == best_value && best_value > current && candidate < best;
        if (value > best_value || tie_break) {
          best = std::move(candidate);
          best_value = value;
        }
      }
    }
    if (!(best_value > current)) break;
    chosen = std::move(best);
    current = best_value;
    history.push_back({as_values(chosen), current, evaluations});
  }
  return {ThresholdSet(as_values(chosen)), current, std::move(history)};
}

GreedyResult greedy_threshold_search(const EmpiricalDistribution& dist, std::size_t n,
                                     GreedyObjective objective, const GreedyOptions& options) {
  const std::vector<double> grid = quantile_grid(dist, options.grid_points);
  return greedy_threshold_search(dist, grid, n, objective, options);
}

}  // namespace sopbound::volume
