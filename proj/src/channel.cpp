#include "sopbound/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sopbound/error.hpp"

namespace sopbound::channel {

namespace {

constexpr double kMinDistance = 1e-12;

Eigen::MatrixXcd complex_gaussian(int size, double variance, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  Eigen::MatrixXcd m(size, size);
  for (int j = 0; j < size; ++j) {
    for (int i = 0; i < size; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(i, j) = {re, im};
    }
  }
  return m;
}

double power_gain(const Eigen::MatrixXcd& m, GainRule rule) {
  if (rule == GainRule::kFirstEntry) return std::norm(m(0, 0));
  if (m.size() == 1) return std::norm(m(0, 0));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const double s = svd.singularValues()(0);
  return s * s;
}

double snr_of(double power, double gain, double noise_var) {
  if (std::isinf(noise_var)) return 0.0;
  return power * gain / noise_var;
}

}  // namespace

Distances distances(const NetworkGeometry& geometry) {
  if (geometry.eve_offset_d < 0.0) throw DomainError("eve offset d must be non-negative");
  if (!(geometry.path_loss_exponent > 0.0)) throw DomainError("path-loss exponent must be positive");
  const Eigen::Vector3d eve = geometry.eve_pos();
  const double d_ab = (geometry.alice_pos - geometry.bob_pos).norm();
  const double d_ae = (geometry.alice_pos - eve).norm();
  const double d_be = (geometry.bob_pos - eve).norm();
  if (d_ab < kMinDistance || d_ae < kMinDistance || d_be < kMinDistance) {
    throw DomainError("degenerate geometry: two terminals coincide");
  }
  return {d_ab, d_ae};
}

double path_loss_scale(double distance, double path_loss_exponent) {
  return std::pow(distance, -path_loss_exponent / 2.0);
}

MeanSnr mean_snr(const NetworkGeometry& geometry, const LinkBudget& budget) {
  if (!(budget.transmit_power_pa > 0.0) || !(budget.noise_var_bob > 0.0) ||
      !(budget.noise_var_eve > 0.0)) {
    throw DomainError("link budget entries must be positive");
  }
  const auto [d_ab, d_ae] = distances(geometry);
  const double eps = geometry.path_loss_exponent;
  return {snr_of(budget.transmit_power_pa, std::pow(d_ab, -eps), budget.noise_var_bob),
          snr_of(budget.transmit_power_pa, std::pow(d_ae, -eps), budget.noise_var_eve)};
}

FadingDraw sample_fading(const NetworkGeometry& geometry, int size, Rng& rng) {
  if (size < 1) throw DimensionError("fading matrix size must be at least 1");
  const auto [d_ab, d_ae] = distances(geometry);
  const double variance = 1.0 / size;
  Eigen::MatrixXcd h = complex_gaussian(size, variance, rng);
  Eigen::MatrixXcd g = complex_gaussian(size, variance, rng);
  h *= path_loss_scale(d_ab, geometry.path_loss_exponent);
  g *= path_loss_scale(d_ae, geometry.path_loss_exponent);
  return {std::move(h), std::move(g), variance};
}

FadingDraw sample_fading(const NetworkGeometry& geometry, int size, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_fading(geometry, size, rng);
}

double secrecy_rate(double snr_b, double snr_e) {
  if (snr_b < 0.0 || snr_e < 0.0 || std::isnan(snr_b) || std::isnan(snr_e)) {
    throw DomainError("SNR values must be non-negative");
  }
  const double rate = std::log2((1.0 + snr_b) / (1.0 + snr_e));
  return std::max(0.0, rate);
}

SnrSamples sample_snr(const NetworkGeometry& geometry, const LinkBudget& budget, std::size_t n,
                      std::uint64_t seed, const SecrecySampleOptions& options) {
  if (n == 0) throw DimensionError("sample count must be at least 1");
  mean_snr(geometry, budget);  // validates the budget
  Rng rng = make_rng(seed);
  SnrSamples out;
  out.snr_b.reserve(n);
  out.snr_e.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const FadingDraw draw = sample_fading(geometry, options.size, rng);
    out.snr_b.push_back(snr_of(budget.transmit_power_pa, power_gain(draw.h_matrix, options.gain_rule),
                               budget.noise_var_bob));
    out.snr_e.push_back(snr_of(budget.transmit_power_pa, power_gain(draw.g_matrix, options.gain_rule),
                               budget.noise_var_eve));
  }
  return out;
}

std::vector<double> sample_secrecy(const NetworkGeometry& geometry, const LinkBudget& budget,
                                   std::size_t n, std::uint64_t seed,
                                   const SecrecySampleOptions& options) {
  const SnrSamples snr = sample_snr(geometry, budget, n, seed, options);
  std::vector<double> rates(n);
  for (std::size_t k = 0; k < n; ++k) rates[k] = secrecy_rate(snr.snr_b[k], snr.snr_e[k]);
  return rates;
}

SpectralRadius spectral_radius(const LinearDynamics& dyn) {
  if (dyn.a1.rows() != dyn.a1.cols() || dyn.a1.rows() == 0) {
    throw DimensionError("a1 must be a non-empty square matrix");
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(dyn.a1, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue iteration failed for a1");
  const double phi = solver.eigenvalues().cwiseAbs().maxCoeff();
  return {phi, phi > 1.0};
}

DynamicsStep step_dynamics(const Eigen::VectorXd& state, const LinearDynamics& dyn, Rng& rng) {
  const Eigen::Index n = dyn.a1.rows();
  if (dyn.a1.cols() != n || state.size() != n || dyn.a2.size() != n || dyn.a3.size() != n) {
    throw DimensionError("state, a1, a2 and a3 dimensions disagree");
  }
  if (dyn.w0 < 0.0 || dyn.w1 < 0.0 || dyn.w2 < 0.0) throw DomainError("noise variances must be >= 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  DynamicsStep out;
  out.observation_bob = dyn.a2.dot(state);
  out.observation_eve = dyn.a3.dot(state);
  out.next_state = dyn.a1 * state;
  // Draws are taken even for zero variances so the stream position does not
  // depend on the noise configuration.
  for (Eigen::Index i = 0; i < n; ++i) out.next_state(i) += std::sqrt(dyn.w0) * normal(rng);
  out.observation_bob += std::sqrt(dyn.w1) * normal(rng);
  out.observation_eve += std::sqrt(dyn.w2) * normal(rng);
  return out;
}

}  // namespace sopbound::channel
