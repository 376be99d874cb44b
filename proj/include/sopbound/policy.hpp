#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sopbound/random.hpp"

namespace sopbound::policy {

/// Tables are indexed (state, action).
using Table = Eigen::MatrixXd;

/// Explicit finite MDP. kernel[s](a, s') = P(s' | s, a).
struct MdpSpec {
  int n_states = 0;
  int n_actions = 0;
  std::vector<Eigen::MatrixXd> kernel;
  Table reward;  // expected reward R(s, a)
  double discount = 0.9;

  void validate() const;
};

/// Joint eigenvalue ensemble with u0 minimum- and v0 maximum-eigenvalue
/// slots, Dyson index beta and a confining potential (default zeta^2).
struct EigenEnsemble {
  int u0 = 5;
  int v0 = 7;
  double beta = 2.0;
  std::function<double(double)> potential = [](double z) { return z * z; };

  void validate() const;
  int slots() const { return u0 + v0; }
  int actions() const { return u0 > v0 ? u0 : v0; }
};

inline constexpr double kRewardCap = 50.0;

/// log of the unnormalised joint density:
///   beta sum_{u,v} log|max_v - min_u| - beta (u0 + v0) / 2 sum_all V(zeta).
/// -inf when a maximum coincides with a minimum.
double log_joint_eig_density(const Eigen::VectorXd& zeta_max, const Eigen::VectorXd& zeta_min,
                             const EigenEnsemble& ensemble);
double joint_eig_density(const Eigen::VectorXd& zeta_max, const Eigen::VectorXd& zeta_min,
                         const EigenEnsemble& ensemble);

/// min(cap, log(1 / P)), floored at -cap.
double reward(const Eigen::VectorXd& zeta_max, const Eigen::VectorXd& zeta_min,
              const EigenEnsemble& ensemble, double cap = kRewardCap);

/// Sampling interface used by the actor-critic.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int n_states() const = 0;
  virtual int n_actions() const = 0;
  virtual int reset(Rng& rng) = 0;
  struct Transition {
    int next_state;
    double reward;
  };
  virtual Transition step(int state, int action, Rng& rng) = 0;
};

/// Samples transitions from an explicit MdpSpec; rewards are deterministic
/// R(s, a). Starts in state 0.
class TabularEnvironment final : public Environment {
 public:
  explicit TabularEnvironment(MdpSpec spec);
  int n_states() const override { return spec_.n_states; }
  int n_actions() const override { return spec_.n_actions; }
  int reset(Rng& rng) override;
  Transition step(int state, int action, Rng& rng) override;
  const MdpSpec& spec() const { return spec_; }

 private:
  MdpSpec spec_;
};

/// States are the u0 + v0 eigenvalue slots (minima first). Action 0 is the
/// no-op: the state and configuration stay put and the reward is paid
/// again. Action a >= 1 targets slot (s + a) mod slots, proposes a unit
/// Gaussian value for it and accepts by the Metropolis ratio of the joint
/// density; the next state is the targeted slot either way.
class MarkovEigenstateEnv final : public Environment {
 public:
  explicit MarkovEigenstateEnv(EigenEnsemble ensemble);
  int n_states() const override { return ensemble_.slots(); }
  int n_actions() const override { return ensemble_.actions(); }
  int reset(Rng& rng) override;
  Transition step(int state, int action, Rng& rng) override;

  /// Slot transition kernel of the construction; kernel[s](a, s').
  std::vector<Eigen::MatrixXd> kernel() const;
  int target_slot(int state, int action) const;

  const Eigen::VectorXd& zeta_max() const { return zeta_max_; }
  const Eigen::VectorXd& zeta_min() const { return zeta_min_; }
  const EigenEnsemble& ensemble() const { return ensemble_; }

  /// Explicit MDP with R(s, a) estimated by Monte Carlo rollouts under the
  /// uniform policy; used as the reference for the Q-error curve.
  MdpSpec estimated_model(double discount, std::size_t steps, std::uint64_t seed) const;

 private:
  double& slot(int index);
  EigenEnsemble ensemble_;
  Eigen::VectorXd zeta_max_;
  Eigen::VectorXd zeta_min_;
  double current_log_density_ = 0.0;
};

/// Step-size, temperature and greediness schedules of the actor-critic.
struct Schedules {
  std::function<double(long)> alpha;
  std::function<double(long)> beta;
  std::function<double(long)> epsilon;

  /// alpha_t = 1/(t^0.6 + 1), beta_t = 1/(t^0.8 + 1),
  /// epsilon_t = max(0.01, 0.5 / sqrt(t + 1)).
  static Schedules diminishing();
  static Schedules constant(double alpha, double beta, double epsilon);
};

struct ActorCriticState {
  Table q;
  Table policy;    // pi_t(a | s), rows on the simplex
  Table behavior;  // pi_hat_t = eps/|A| + (1 - eps) pi_t
  long t = 0;
  int state = 0;   // S_t
  int action = 0;  // A_t
  double last_reward = 0.0;
  double last_epsilon = 1.0;

  /// Uniform policies and a constant critic q0; S_0 from the environment,
  /// A_0 ~ pi_0.
  static ActorCriticState initial(Environment& env, Rng& rng, double q0 = 0.0);
};

/// One iteration: sample S_{t+1}, A_{t+1}, update the single (S_t, A_t)
/// entry of Q, apply the multiplicative softmax update to every state and
/// re-mix the behaviour policy.
ActorCriticState ac_step(const ActorCriticState& state, Environment& env, const Schedules& schedules,
                         double discount, Rng& rng);

struct TraceRow {
  long iteration;
  double avg_reward;  // trailing-window mean of the received rewards
  double q_error;     // ||Q_t - Q*||_inf / ||Q*||_inf
  double avg_policy;  // mean over states of pi_t(argmax_a Q*(s, a) | s)
};

struct TrainingTrace {
  std::vector<TraceRow> rows;  // T + 1 rows, row 0 is the initial state
  long sampled_index = 0;      // T-hat
};

struct TrainOptions {
  long iterations = 5000;
  double discount = 0.9;
  std::uint64_t seed = 1;
  std::size_t reward_window = 500;
  double initial_q = 0.0;
};

struct TrainResult {
  TrainingTrace trace;
  Table output_policy;  // pi_hat at the sampled index
  ActorCriticState final_state;
};

/// Runs the actor-critic for options.iterations steps. `q_star` is the
/// reference for the error and policy columns; when absent those columns
/// are NaN.
TrainResult train(Environment& env, const Schedules& schedules, const TrainOptions& options,
                  const std::optional<Table>& q_star);

/// Q* of an explicit MDP by value iteration, sup-norm residual < tol.
Table value_iteration_oracle(const MdpSpec& spec, double tol = 1e-10);

/// Greedy action per state; ties resolve to the lowest action index.
std::vector<int> greedy_policy(const Table& q);

}  // namespace sopbound::policy
