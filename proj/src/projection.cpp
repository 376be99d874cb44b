#include "sopbound/projection.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <boost/random/normal_distribution.hpp>

#include "sopbound/error.hpp"
#include "sopbound/random.hpp"

namespace sopbound::projection {

namespace {

// Ziggurat sampler; the Monte Carlo loops are dominated by normal draws.
using Normal = boost::random::normal_distribution<double>;

double denominator(const ProjectionBounds& b) { return (b.theta_max - b.theta_min - b.eta) * b.eta; }

void check_shapes(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DimensionError("theta and Theta must have the same shape");
  }
}

// QR of an n x k Gaussian matrix; the first k columns of Q span a uniformly
// random k-dimensional subspace of R^n.
Eigen::HouseholderQR<Eigen::MatrixXd> random_subspace(Eigen::Index n, Eigen::Index k, Rng& rng,
                                                      Normal& normal) {
  Eigen::MatrixXd g(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = normal(rng);
  }
  return Eigen::HouseholderQR<Eigen::MatrixXd>(g);
}

Eigen::MatrixXd random_basis(Eigen::Index n, Eigen::Index k, Rng& rng,
                             Normal& normal) {
  return random_subspace(n, k, rng, normal).householderQ() * Eigen::MatrixXd::Identity(n, k);
}

}  // namespace

void ProjectionBounds::validate() const {
  if (!(theta_min < 0.0) || !(theta_max > 0.0)) {
    throw DomainError("projection bounds need theta_min < 0 < theta_max");
  }
  if (!(eta > 0.0)) throw DomainError("projection tolerance eta must be positive");
  if (!(eta < 0.5 * (theta_max - theta_min)) || !(eta < theta_max) || !(eta < -theta_min)) {
    throw DomainError("eta must be below (max - min) / 2, max and |min|");
  }
}

MatrixBounds MatrixBounds::broadcast(const ProjectionBounds& b, Eigen::Index rows,
                                     Eigen::Index cols) {
  b.validate();
  return {Eigen::MatrixXd::Constant(rows, cols, b.theta_min),
          Eigen::MatrixXd::Constant(rows, cols, b.theta_max),
          Eigen::MatrixXd::Constant(rows, cols, b.eta)};
}

ProjectionBounds MatrixBounds::at(Eigen::Index i, Eigen::Index j) const {
  return {theta_min(i, j), theta_max(i, j), eta(i, j)};
}

double f_margin(double theta, const ProjectionBounds& b) {
  return (theta - b.theta_min - b.eta) * (theta - b.theta_max + b.eta) / denominator(b);
}

double f_margin_derivative(double theta, const ProjectionBounds& b) {
  return (2.0 * theta - b.theta_min - b.theta_max) / denominator(b);
}

double proj(double theta, double big_theta, const ProjectionBounds& bounds) {
  const double f = f_margin(theta, bounds);
  if (f > 0.0 && big_theta * f_margin_derivative(theta, bounds) > 0.0) {
    return big_theta - big_theta * f;
  }
  return big_theta;
}

Eigen::MatrixXd proj_matrix(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& big_theta,
                            const MatrixBounds& bounds) {
  check_shapes(theta, big_theta);
  check_shapes(theta, bounds.theta_min);
  check_shapes(theta, bounds.theta_max);
  check_shapes(theta, bounds.eta);
  Eigen::MatrixXd out(theta.rows(), theta.cols());
  for (Eigen::Index j = 0; j < theta.cols(); ++j) {
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
      const ProjectionBounds b = bounds.at(i, j);
      b.validate();
      out(i, j) = proj(theta(i, j), big_theta(i, j), b);
    }
  }
  return out;
}

Eigen::MatrixXd proj_matrix(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& big_theta,
                            const ProjectionBounds& bounds) {
  return proj_matrix(theta, big_theta, MatrixBounds::broadcast(bounds, theta.rows(), theta.cols()));
}

double trace_inequality(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& theta_star,
                        const Eigen::MatrixXd& big_theta, const ProjectionBounds& bounds) {
  check_shapes(theta, theta_star);
  const Eigen::MatrixXd correction = proj_matrix(theta, big_theta, bounds) - big_theta;
  return ((theta - theta_star).transpose() * correction).trace();
}

double jl_analytic_bound(int k, double tau2) { return std::exp(-k * tau2 * tau2 / 4.0); }

std::vector<TailBoundReport> jl_tail_experiment(const Eigen::VectorXd& v_i,
                                                const Eigen::VectorXd& v_j, int k,
                                                const std::vector<double>& tau2_values,
                                                const JlOptions& options) {
  const Eigen::Index n = v_i.size();
  if (v_j.size() != n) throw DimensionError("JL points must share a dimension");
  if (k < 1 || k >= n) throw DomainError("JL experiment needs 1 <= k < n");
  for (double tau2 : tau2_values) {
    if (!(tau2 > 0.0 && tau2 < 1.0)) throw DomainError("tau2 must lie in (0, 1)");
  }
  if (options.trials == 0) throw DomainError("JL experiment needs at least one trial");
  const Eigen::VectorXd diff = v_i - v_j;
  const double tau1 = diff.squaredNorm();
  if (!(tau1 > 0.0)) throw DomainError("JL points must be distinct");
  const double scale = static_cast<double>(n) / k;

  Rng rng = make_rng(options.seed);
  Normal normal(0.0, 1.0);
  std::vector<std::size_t> hits(tau2_values.size(), 0);
  Eigen::MatrixXd g(n, k);
  Eigen::MatrixXd gram(k, k);
  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    for (Eigen::Index j = 0; j < k; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) g(i, j) = normal(rng);
    }
    // ||P diff||^2 = c^T (G^T G)^{-1} c with c = G^T diff, P the projector
    // onto span(G); one Cholesky factor instead of a full QR.
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(g.transpose());
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericalError("Gaussian basis is rank deficient");
    const Eigen::VectorXd c = g.transpose() * diff;
    const double l = scale * llt.matrixL().solve(c).squaredNorm();
    for (std::size_t c = 0; c < tau2_values.size(); ++c) {
      if (l <= (1.0 - tau2_values[c]) * tau1) ++hits[c];
    }
  }
  std::vector<TailBoundReport> out;
  const auto trials = static_cast<double>(options.trials);
  for (std::size_t c = 0; c < tau2_values.size(); ++c) {
    const double freq = static_cast<double>(hits[c]) / trials;
    const double se = std::sqrt(std::max(freq * (1.0 - freq), 1.0 / trials) / trials);
    const double bound = jl_analytic_bound(k, tau2_values[c]);
    out.push_back({tau1, tau2_values[c], k, freq, se, bound, freq <= bound + 3.0 * se});
  }
  return out;
}

TailBoundReport jl_tail_experiment(const Eigen::VectorXd& v_i, const Eigen::VectorXd& v_j, int k,
                                   double tau2, const JlOptions& options) {
  return jl_tail_experiment(v_i, v_j, k, std::vector<double>{tau2}, options).front();
}

double gaussian_width(const Eigen::MatrixXd& points, std::size_t draws, std::uint64_t seed) {
  if (points.cols() == 0) throw DimensionError("point set is empty");
  if (draws == 0) throw DomainError("gaussian width needs at least one draw");
  Rng rng = make_rng(seed);
  Normal normal(0.0, 1.0);
  Eigen::VectorXd g(points.rows());
  double acc = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = normal(rng);
    acc += (points.transpose() * g).maxCoeff();
  }
  return acc / static_cast<double>(draws);
}

double diameter(const Eigen::MatrixXd& points) {
  double best = 0.0;
  for (Eigen::Index a = 0; a < points.cols(); ++a) {
    for (Eigen::Index b = a + 1; b < points.cols(); ++b) {
      best = std::max(best, (points.col(a) - points.col(b)).norm());
    }
  }
  return best;
}

DiameterReport projected_diameter_check(const Eigen::MatrixXd& points, int r2, double c0,
                                        const DiameterOptions& options) {
  const Eigen::Index r1 = points.rows();
  if (points.cols() == 0) throw DimensionError("point set is empty");
  if (r2 < 1 || r2 >= r1) throw DomainError("projection dimension must satisfy 1 <= r2 < r1");
  if (!(c0 >= 0.0)) throw DomainError("c0 must be non-negative");
  DiameterReport report{};
  // E <x, g> = 0 exactly for a single point.
  report.gaussian_width =
      points.cols() == 1 ? 0.0 : gaussian_width(points, options.width_draws, options.seed);
  report.diameter = diameter(points);
  report.bound = c0 * (report.gaussian_width +
                       std::sqrt(static_cast<double>(r2) / static_cast<double>(r1)) * report.diameter);
  report.required_frequency = 1.0 - 2.0 * std::exp(-static_cast<double>(r2));

  Rng rng = derive_stream(options.seed, 1);
  Normal normal(0.0, 1.0);
  std::size_t held = 0;
  for (std::size_t t = 0; t < options.trials; ++t) {
    const Eigen::MatrixXd basis = random_basis(r1, r2, rng, normal);
    const double projected = diameter(basis.transpose() * points);
    report.max_projected_diameter = std::max(report.max_projected_diameter, projected);
    if (projected <= report.bound + 1e-12) ++held;
  }
  report.holds_frequency =
      options.trials == 0 ? 1.0 : static_cast<double>(held) / static_cast<double>(options.trials);
  report.holds = report.holds_frequency >= report.required_frequency;
  return report;
}

}  // namespace sopbound::projection
