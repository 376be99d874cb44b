#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sopbound/random.hpp"

namespace sopbound::channel {

/// Positions of the three terminals. Eve sits at (0, -d, 0).
struct NetworkGeometry {
  Eigen::Vector3d alice_pos{-50.0, 0.0, 0.0};
  Eigen::Vector3d bob_pos{0.0, 50.0 * 1.7320508075688772, 0.0};
  double eve_offset_d = 50.0;
  double path_loss_exponent = 3.0;

  Eigen::Vector3d eve_pos() const { return {0.0, -eve_offset_d, 0.0}; }
};

struct Distances {
  double d_ab;
  double d_ae;
};

/// Linear transmit power and receiver noise variances.
struct LinkBudget {
  double transmit_power_pa = 1.0;
  double noise_var_bob = 1e-7;
  double noise_var_eve = 1e-7;
};

struct MeanSnr {
  double bob;
  double eve;
};

/// Rayleigh fading matrices for both links, already scaled by D^{-eps/2}.
struct FadingDraw {
  Eigen::MatrixXcd h_matrix;  // Alice -> Bob
  Eigen::MatrixXcd g_matrix;  // Alice -> Eve
  double entry_variance;      // variance of the unscaled entries, 1/size
};

/// How a fading matrix collapses to a scalar power gain.
enum class GainRule {
  kFirstEntry,      // |h_00|^2, the scalar link
  kLargestSingular  // sigma_max(H)^2, the matrix link
};

/// x+ = a1 x + w0 ; (obs_bob, obs_eve) = (a2 x + w1, a3 x + w2)
struct LinearDynamics {
  Eigen::MatrixXd a1;
  Eigen::RowVectorXd a2;
  Eigen::RowVectorXd a3;
  double w0 = 0.0;  // process noise variance
  double w1 = 0.0;  // Bob observation noise variance
  double w2 = 0.0;  // Eve observation noise variance
};

struct SpectralRadius {
  double phi;
  bool unstable;
};

struct DynamicsStep {
  Eigen::VectorXd next_state;
  double observation_bob;
  double observation_eve;
};

Distances distances(const NetworkGeometry& geometry);

/// Large-scale amplitude factor D^{-eps/2}.
double path_loss_scale(double distance, double path_loss_exponent);

/// Mean received SNRs P_a / (D^eps sigma^2) for both links.
MeanSnr mean_snr(const NetworkGeometry& geometry, const LinkBudget& budget);

/// Complex Gaussian entries with variance 1/size (real and imaginary parts
/// each 1/(2 size)), scaled by D^{-eps/2} per link.
FadingDraw sample_fading(const NetworkGeometry& geometry, int size, Rng& rng);
FadingDraw sample_fading(const NetworkGeometry& geometry, int size, std::uint64_t seed);

/// Gaussian wiretap secrecy rate max(0, log2((1 + snr_b) / (1 + snr_e))), in
/// bits per channel use. SNRs are linear.
double secrecy_rate(double snr_b, double snr_e);

struct SecrecySampleOptions {
  int size = 1;
  GainRule gain_rule = GainRule::kFirstEntry;
};

/// Per-draw effective SNRs P_a * gain(H) / sigma^2 for n independent fading
/// realisations, where H is the path-loss scaled matrix of sample_fading.
struct SnrSamples {
  std::vector<double> snr_b;
  std::vector<double> snr_e;
};
SnrSamples sample_snr(const NetworkGeometry& geometry, const LinkBudget& budget, std::size_t n,
                      std::uint64_t seed, const SecrecySampleOptions& options = {});

std::vector<double> sample_secrecy(const NetworkGeometry& geometry, const LinkBudget& budget,
                                   std::size_t n, std::uint64_t seed,
                                   const SecrecySampleOptions& options = {});

SpectralRadius spectral_radius(const LinearDynamics& dyn);

DynamicsStep step_dynamics(const Eigen::VectorXd& state, const LinearDynamics& dyn, Rng& rng);

}  // namespace sopbound::channel
