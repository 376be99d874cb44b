#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace sopbound::projection {

/// Box (theta_min, theta_max) with soft-boundary width eta. Requires
/// theta_min < 0 < theta_max and eta < min((max - min) / 2, max, |min|).
struct ProjectionBounds {
  double theta_min = -1.0;
  double theta_max = 1.0;
  double eta = 0.1;

  void validate() const;
};

/// Per-entry bounds for matrix arguments; scalar bounds broadcast.
struct MatrixBounds {
  Eigen::MatrixXd theta_min;
  Eigen::MatrixXd theta_max;
  Eigen::MatrixXd eta;

  static MatrixBounds broadcast(const ProjectionBounds& b, Eigen::Index rows, Eigen::Index cols);
  ProjectionBounds at(Eigen::Index i, Eigen::Index j) const;
};

/// f(theta) = (theta - min - eta)(theta - max + eta) / ((max - min - eta) eta).
/// Zero on the soft boundary, one on the hard boundary, negative inside.
double f_margin(double theta, const ProjectionBounds& bounds);

/// df/dtheta = (2 theta - min - max) / ((max - min - eta) eta).
double f_margin_derivative(double theta, const ProjectionBounds& bounds);

/// Theta (1 - f(theta)) when f(theta) > 0 and Theta f'(theta) > 0, else Theta.
double proj(double theta, double big_theta, const ProjectionBounds& bounds);

Eigen::MatrixXd proj_matrix(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& big_theta,
                            const ProjectionBounds& bounds);
Eigen::MatrixXd proj_matrix(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& big_theta,
                            const MatrixBounds& bounds);

/// tr((theta - theta*)^T (-Theta + Proj(theta, Theta))); non-positive for
/// theta* inside the soft box.
double trace_inequality(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& theta_star,
                        const Eigen::MatrixXd& big_theta, const ProjectionBounds& bounds);

struct TailBoundReport {
  double tau1;            // ||v_i - v_j||^2 after the sqrt(n/k) normalisation
  double tau2;
  int k;
  double empirical_freq;  // fraction of trials with L <= (1 - tau2) tau1
  double standard_error;
  double analytic_bound;  // exp(-k tau2^2 / 4)
  bool holds;
};

struct JlOptions {
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
};

/// Random k-dimensional subspaces of R^n by orthonormalising Gaussian
/// matrices; L is the squared projected distance scaled by n / k.
TailBoundReport jl_tail_experiment(const Eigen::VectorXd& v_i, const Eigen::VectorXd& v_j, int k,
                                   double tau2, const JlOptions& options = {});

/// Same trials evaluated for several tau2 values at once.
std::vector<TailBoundReport> jl_tail_experiment(const Eigen::VectorXd& v_i,
                                                const Eigen::VectorXd& v_j, int k,
                                                const std::vector<double>& tau2_values,
                                                const JlOptions& options = {});

double jl_analytic_bound(int k, double tau2);

struct DiameterReport {
  double gaussian_width;
  double diameter;
  double bound;                   // c0 (w + sqrt(r2 / r1) diam)
  double max_projected_diameter;
  double holds_frequency;
  double required_frequency;      // 1 - 2 exp(-r2)
  bool holds;
};

struct DiameterOptions {
  std::size_t trials = 10000;
  std::size_t width_draws = 10000;
  std::uint64_t seed = 1;
};

/// Monte Carlo Gaussian width E sup <x, g> of a finite point set
/// (points are the columns).
double gaussian_width(const Eigen::MatrixXd& points, std::size_t draws, std::uint64_t seed);

double diameter(const Eigen::MatrixXd& points);

DiameterReport projected_diameter_check(const Eigen::MatrixXd& points, int r2, double c0,
                                        const DiameterOptions& options = {});

}  // namespace sopbound::projection
