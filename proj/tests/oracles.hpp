#pragma once

// Reference computations used by the test suites. Each one takes a
// different route from the library code it checks: brute-force
// enumeration, closed forms or a different decomposition.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracle {

inline double gaussian_volume(double sigma) {
  return std::sqrt(2.0 * std::numbers::pi * std::numbers::e) * sigma;
}

// Eigenvalues of a real pencil (B, A) via the real QZ decomposition.
// Infinite eigenvalues (beta ~ 0) are dropped.
inline std::vector<std::complex<double>> qz_eigenvalues(const Eigen::MatrixXd& b, const Eigen::MatrixXd& a) {
  Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(b, a, false);
  std::vector<std::complex<double>> out;
  const double scale = std::max(1.0, a.norm());
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    const double beta = ges.betas()(i);
    if (std::abs(beta) > 1e-12 * scale) out.push_back(ges.alphas()(i) / beta);
  }
  return out;
}

inline int count_in_disk(const std::vector<std::complex<double>>& eigs, std::complex<double> center, double r) {
  int n = 0;
  for (const auto& z : eigs) n += std::abs(z - center) < r ? 1 : 0;
  return n;
}

inline double min_distance_to_circle(const std::vector<std::complex<double>>& eigs, std::complex<double> center,
                                     double r) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& z : eigs) d = std::min(d, std::abs(std::abs(z - center) - r));
  return d;
}

// Q* of a finite MDP by enumerating every deterministic policy and solving
// (I - gamma P_pi) V = R_pi exactly; the optimal V is the element-wise max.
inline Eigen::MatrixXd q_star_by_enumeration(const std::vector<Eigen::MatrixXd>& kernel,
                                             const Eigen::MatrixXd& reward, double gamma) {
  const auto s_count = reward.rows();
  const auto a_count = reward.cols();
  Eigen::VectorXd best = Eigen::VectorXd::Constant(s_count, -std::numeric_limits<double>::infinity());
  std::vector<int> pol(static_cast<std::size_t>(s_count), 0);
  for (;;) {
    Eigen::MatrixXd p(s_count, s_count);
    Eigen::VectorXd r(s_count);
    for (Eigen::Index s = 0; s < s_count; ++s) {
      p.row(s) = kernel[static_cast<std::size_t>(s)].row(pol[static_cast<std::size_t>(s)]);
      r(s) = reward(s, pol[static_cast<std::size_t>(s)]);
    }
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(s_count, s_count) - gamma * p;
    const Eigen::VectorXd v = m.fullPivLu().solve(r);
    best = best.cwiseMax(v);
    std::size_t i = 0;
    while (i < pol.size() && ++pol[i] == a_count) pol[i++] = 0;
    if (i == pol.size()) break;
  }
  Eigen::MatrixXd q(s_count, a_count);
  for (Eigen::Index s = 0; s < s_count; ++s) {
    for (Eigen::Index a = 0; a < a_count; ++a) {
      q(s, a) = reward(s, a) + gamma * kernel[static_cast<std::size_t>(s)].row(a).dot(best);
    }
  }
  return q;
}

// out(s1, s3) = max_{s2} k32(s2, s3) k21(s1, s2) / max_{s2} k21(s1, s2),
// written as three explicit loops; zero rows give all ones.
inline Eigen::MatrixXd max_chain_by_enumeration(const Eigen::MatrixXd& k32, const Eigen::MatrixXd& k21) {
  Eigen::MatrixXd out(k21.rows(), k32.cols());
  for (Eigen::Index s1 = 0; s1 < k21.rows(); ++s1) {
    double w = 0.0;
    for (Eigen::Index s2 = 0; s2 < k21.cols(); ++s2) w = std::max(w, k21(s1, s2));
    for (Eigen::Index s3 = 0; s3 < k32.cols(); ++s3) {
      double m = 0.0;
      for (Eigen::Index s2 = 0; s2 < k21.cols(); ++s2) m = std::max(m, k32(s2, s3) * k21(s1, s2));
      out(s1, s3) = w == 0.0 ? 1.0 : std::min(1.0, m / w);
    }
  }
  return out;
}

// Possibility and necessity of a subset by scanning membership bits.
inline double sup_over(const std::vector<double>& v, unsigned mask) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask & (1u << i)) s = std::max(s, v[i]);
  }
  return s;
}

// E max_i |g_i| over r iid standard normals:
//   integral_0^inf 1 - (2 Phi(x) - 1)^r dx = integral_0^inf 1 - erf(x / sqrt 2)^r dx.
inline double expected_max_abs_normal(int r) {
  const double h = 1e-4;
  double acc = 0.0;
  for (double x = 0.5 * h; x < 12.0; x += h) acc += 1.0 - std::pow(std::erf(x / std::numbers::sqrt2), r);
  return acc * h;
}

// E ||g|| for g ~ N(0, I_r): sqrt 2 Gamma((r + 1) / 2) / Gamma(r / 2).
inline double expected_gaussian_norm(int r) {
  return std::numbers::sqrt2 * std::exp(std::lgamma(0.5 * (r + 1)) - std::lgamma(0.5 * r));
}

// sin of the angle between unit-normalised vectors.
inline double sin_angle(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double c = std::abs(u.normalized().dot(v.normalized()));
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

// Best n-subset of an ascending grid under `objective`, by enumeration.
// Ties keep the lexicographically smallest subset.
inline std::vector<double> best_subset(const std::vector<double>& grid, std::size_t n,
                                       const std::function<double(const std::vector<double>&)>& objective) {
  std::vector<bool> pick(grid.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(n), true);
  std::vector<double> best;
  double best_value = -std::numeric_limits<double>::infinity();
  do {
    std::vector<double> subset;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (pick[i]) subset.push_back(grid[i]);
    }
    const double v = objective(subset);
    if (v > best_value) {
      best_value = v;
      best = subset;
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

}  // namespace oracle
