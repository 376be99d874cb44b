#include "sopbound/policy.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <string>

#include <fmt/format.h>

#include "sopbound/error.hpp"

namespace sopbound::policy {

namespace {

constexpr double kRowTolerance = 1e-12;

int sample_row(const Table& table, int row, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  const int last = static_cast<int>(table.cols()) - 1;
  for (int a = 0; a < last; ++a) {
    acc += table(row, a);
    if (u < acc) return a;
  }
  return last;
}

Table mix(const Table& policy, double epsilon) {
  const double floor = epsilon / static_cast<double>(policy.cols());
  Table out(policy.rows(), policy.cols());
  for (Eigen::Index s = 0; s < policy.rows(); ++s) {
    for (Eigen::Index a = 0; a < policy.cols(); ++a) out(s, a) = floor + (1.0 - epsilon) * policy(s, a);
  }
  return out;
}

double checked(const std::function<double(long)>& f, long t, const char* name, double lo,
               double hi) {
  if (!f) throw DomainError(fmt::format("schedule {} is not set", name));
  const double v = f(t);
  if (!(v >= lo && v <= hi)) {
    throw DomainError(fmt::format("schedule {} at t={} is {}, outside [{}, {}]", name, t, v, lo, hi));
  }
  return v;
}

double sup_norm(const Table& t) { return t.size() == 0 ? 0.0 : t.cwiseAbs().maxCoeff(); }

}  // namespace

void MdpSpec::validate() const {
  if (n_states < 1 || n_actions < 1) throw DomainError("MDP needs at least one state and action");
  if (!(discount >= 0.0 && discount < 1.0)) throw DomainError("discount must lie in [0, 1)");
  if (static_cast<int>(kernel.size()) != n_states) throw DimensionError("kernel needs one slice per state");
  if (reward.rows() != n_states || reward.cols() != n_actions) {
    throw DimensionError("reward table must be n_states x n_actions");
  }
  for (int s = 0; s < n_states; ++s) {
    const Eigen::MatrixXd& k = kernel[s];
    if (k.rows() != n_actions || k.cols() != n_states) {
      throw DimensionError("kernel slice must be n_actions x n_states");
    }
    if ((k.array() < 0.0).any()) throw DomainError("kernel entries must be non-negative");
    for (int a = 0; a < n_actions; ++a) {
      if (std::abs(k.row(a).sum() - 1.0) > kRowTolerance) {
        throw DomainError(fmt::format("kernel row (s={}, a={}) does not sum to 1", s, a));
      }
    }
  }
  if (!reward.allFinite()) throw DomainError("reward table must be finite");
}

void EigenEnsemble::validate() const {
  if (u0 < 1 || v0 < 1) throw DomainError("ensemble needs u0, v0 >= 1");
  if (!(beta > 0.0)) throw DomainError("Dyson index must be positive");
  if (!potential) throw DomainError("ensemble potential is not set");
}

double log_joint_eig_density(const Eigen::VectorXd& zeta_max, const Eigen::VectorXd& zeta_min,
                             const EigenEnsemble& ensemble) {
  if (zeta_max.size() != ensemble.v0 || zeta_min.size() != ensemble.u0) {
    throw DimensionError("eigenvalue vectors must have v0 and u0 entries");
  }
  const double b = ensemble.beta;
  double log_p = 0.0;
  for (Eigen::Index v = 0; v < zeta_max.size(); ++v) {
    for (Eigen::Index u = 0; u < zeta_min.size(); ++u) {
      const double gap = std::abs(zeta_max(v) - zeta_min(u));
      if (gap == 0.0) return -std::numeric_limits<double>::infinity();
      log_p += b * std::log(gap);
    }
  }
  const double weight = b * static_cast<double>(ensemble.slots()) / 2.0;
  for (double z : zeta_max) log_p -= weight * ensemble.potential(z);
  for (double z : zeta_min) log_p -= weight * ensemble.potential(z);
  return log_p;
}

double joint_eig_density(const Eigen::VectorXd& zeta_max, const Eigen::VectorXd& zeta_min,
                         const EigenEnsemble& ensemble) {
  return std::exp(log_joint_eig_density(zeta_max, zeta_min, ensemble));
}

double reward(const Eigen::VectorXd& zeta_max, const Eigen::VectorXd& zeta_min,
              const EigenEnsemble& ensemble, double cap) {
  const double r = -log_joint_eig_density(zeta_max, zeta_min, ensemble);
  return std::clamp(r, -cap, cap);
}

TabularEnvironment::TabularEnvironment(MdpSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

int TabularEnvironment::reset(Rng&) { return 0; }

Environment::Transition TabularEnvironment::step(int state, int action, Rng& rng) {
  const Eigen::MatrixXd& k = spec_.kernel.at(static_cast<std::size_t>(state));
  return {sample_row(k, action, rng), spec_.reward(state, action)};
}

MarkovEigenstateEnv::MarkovEigenstateEnv(EigenEnsemble ensemble) : ensemble_(std::move(ensemble)) {
  ensemble_.validate();
  Rng unused(0);
  reset(unused);
}

double& MarkovEigenstateEnv::slot(int index) {
  return index < ensemble_.u0 ? zeta_min_(index) : zeta_max_(index - ensemble_.u0);
}

int MarkovEigenstateEnv::target_slot(int state, int action) const {
  return action == 0 ? state : (state + action) % ensemble_.slots();
}

int MarkovEigenstateEnv::reset(Rng& rng) {
  // Symmetric two-cluster start: maxima at +a, minima at -a, with a the
  // maximiser of the density along that family (golden-section search).
  const auto log_p = [this](double a) {
    return log_joint_eig_density(Eigen::VectorXd::Constant(ensemble_.v0, a),
                                 Eigen::VectorXd::Constant(ensemble_.u0, -a), ensemble_);
  };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = 1e-6;
  double hi = 10.0;
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = log_p(x1);
  double f2 = log_p(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = log_p(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = log_p(x1);
    }
  }
  const double a = 0.5 * (lo + hi);
  zeta_max_ = Eigen::VectorXd::Constant(ensemble_.v0, a);
  zeta_min_ = Eigen::VectorXd::Constant(ensemble_.u0, -a);
  current_log_density_ = log_joint_eig_density(zeta_max_, zeta_min_, ensemble_);
  std::uniform_int_distribution<int> pick(0, ensemble_.slots() - 1);
  return pick(rng);
}

Environment::Transition MarkovEigenstateEnv::step(int state, int action, Rng& rng) {
  if (state < 0 || state >= n_states() || action < 0 || action >= n_actions()) {
    throw DomainError("state or action out of range");
  }
  if (action != 0) {
    const int target = target_slot(state, action);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double proposal = normal(rng);
    const double u = unif(rng);
    double& value = slot(target);
    const double old = value;
    value = proposal;
    const double log_new = log_joint_eig_density(zeta_max_, zeta_min_, ensemble_);
    if (std::log(u) < log_new - current_log_density_) {
      current_log_density_ = log_new;
    } else {
      value = old;
    }
    state = target;
  }
  return {state, std::clamp(-current_log_density_, -kRewardCap, kRewardCap)};
}

std::vector<Eigen::MatrixXd> MarkovEigenstateEnv::kernel() const {
  std::vector<Eigen::MatrixXd> out;
  for (int s = 0; s < n_states(); ++s) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n_actions(), n_states());
    for (int a = 0; a < n_actions(); ++a) k(a, target_slot(s, a)) = 1.0;
    out.push_back(std::move(k));
  }
  return out;
}

MdpSpec MarkovEigenstateEnv::estimated_model(double discount, std::size_t steps,
                                             std::uint64_t seed) const {
  MarkovEigenstateEnv sim(ensemble_);
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> pick(0, n_actions() - 1);
  Table sum = Table::Zero(n_states(), n_actions());
  Table count = Table::Zero(n_states(), n_actions());
  int s = sim.reset(rng);
  double total = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const int a = pick(rng);
    const Transition tr = sim.step(s, a, rng);
    sum(s, a) += tr.reward;
    count(s, a) += 1.0;
    total += tr.reward;
    s = tr.next_state;
  }
  const double fallback = steps == 0 ? 0.0 : total / static_cast<double>(steps);
  MdpSpec spec;
  spec.n_states = n_states();
  spec.n_actions = n_actions();
  spec.kernel = kernel();
  spec.discount = discount;
  spec.reward = Table(n_states(), n_actions());
  for (int st = 0; st < n_states(); ++st) {
    for (int a = 0; a < n_actions(); ++a) {
      spec.reward(st, a) = count(st, a) > 0.0 ? sum(st, a) / count(st, a) : fallback;
    }
  }
  spec.validate();
  return spec;
}

Schedules Schedules::diminishing() {
  return Schedules{[](long t) { return 1.0 / (std::pow(static_cast<double>(t), 0.6) + 1.0); },
          [](long t) { return 1.0 / (std::pow(static_cast<double>(t), 0.8) + 1.0); },
          [](long t) { return std::max(0.01, 0.5 / std::sqrt(static_cast<double>(t) + 1.0)); }};
}

Schedules Schedules::constant(double alpha, double beta, double epsilon) {
  return Schedules{[alpha](long) { return alpha; }, [beta](long) { return beta; },
          [epsilon](long) { return epsilon; }};
}

ActorCriticState ActorCriticState::initial(Environment& env, Rng& rng, double q0) {
  ActorCriticState st;
  const int ns = env.n_states();
  const int na = env.n_actions();
  st.q = Table::Constant(ns, na, q0);
  st.policy = Table::Constant(ns, na, 1.0 / na);
  st.behavior = st.policy;
  st.last_epsilon = 1.0;
  st.state = env.reset(rng);
  st.action = sample_row(st.behavior, st.state, rng);
  return st;
}

ActorCriticState ac_step(const ActorCriticState& state, Environment& env, const Schedules& schedules,
                         double discount, Rng& rng) {
  const double alpha = checked(schedules.alpha, state.t, "alpha", 0.0, 1.0);
  const double beta = checked(schedules.beta, state.t, "beta", 0.0,
                              std::numeric_limits<double>::max());
  const double epsilon = checked(schedules.epsilon, state.t + 1, "epsilon", 0.0, 1.0);

  ActorCriticState next = state;
  const Environment::Transition tr = env.step(state.state, state.action, rng);
  const int next_action = sample_row(state.behavior, tr.next_state, rng);

  const double target = tr.reward + discount * state.q(tr.next_state, next_action);
  next.q(state.state, state.action) += alpha * (target - state.q(state.state, state.action));

  if (beta != 0.0) {
    // Multiplicative update in the log domain so large beta * Q cannot overflow.
    for (Eigen::Index s = 0; s < next.policy.rows(); ++s) {
      Eigen::RowVectorXd logits(next.policy.cols());
      for (Eigen::Index a = 0; a < logits.size(); ++a) {
        logits(a) = std::log(state.policy(s, a)) + beta * next.q(s, a);
      }
      const double top = logits.maxCoeff();
      Eigen::RowVectorXd w = (logits.array() - top).exp();
      next.policy.row(s) = w / w.sum();
    }
  }
  next.behavior = mix(next.policy, epsilon);
  next.last_epsilon = epsilon;
  next.last_reward = tr.reward;
  next.state = tr.next_state;
  next.action = next_action;
  next.t = state.t + 1;
  return next;
}

TrainResult train(Environment& env, const Schedules& schedules, const TrainOptions& options,
                  const std::optional<Table>& q_star) {
  if (options.iterations < 0) throw DomainError("iteration count must be non-negative");
  if (options.reward_window == 0) throw DomainError("reward window must be positive");
  if (!(options.discount >= 0.0 && options.discount < 1.0)) {
    throw DomainError("discount must lie in [0, 1)");
  }
  if (q_star && (q_star->rows() != env.n_states() || q_star->cols() != env.n_actions())) {
    throw DimensionError("reference Q table has the wrong shape");
  }

  Rng rng = derive_stream(options.seed, 0);
  Rng index_rng = derive_stream(options.seed, 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  ActorCriticState st = ActorCriticState::initial(env, rng, options.initial_q);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> best;
  double q_scale = 1.0;
  if (q_star) {
    best = greedy_policy(*q_star);
    const double n = sup_norm(*q_star);
    q_scale = n > 0.0 ? n : 1.0;
  }
  const auto row_for = [&](long t, double avg) {
    TraceRow row{t, avg, nan, nan};
    if (q_star) {
      row.q_error = sup_norm(st.q - *q_star) / q_scale;
      double p = 0.0;
      for (int s = 0; s < env.n_states(); ++s) p += st.policy(s, best[static_cast<std::size_t>(s)]);
      row.avg_policy = p / env.n_states();
    }
    return row;
  };

  TrainResult result;
  result.trace.rows.reserve(static_cast<std::size_t>(options.iterations) + 1);
  result.trace.rows.push_back(row_for(0, nan));

  // Weighted reservoir of size one: index i survives with probability
  // beta_i / sum_j beta_j.
  double weight_total = checked(schedules.beta, 0, "beta", 0.0, std::numeric_limits<double>::max());
  result.trace.sampled_index = 0;
  result.output_policy = st.behavior;

  std::deque<double> window;
  double window_sum = 0.0;
  for (long t = 0; t < options.iterations; ++t) {
    st = ac_step(st, env, schedules, options.discount, rng);
    window.push_back(st.last_reward);
    window_sum += st.last_reward;
    if (window.size() > options.reward_window) {
      window_sum -= window.front();
      window.pop_front();
    }
    result.trace.rows.push_back(row_for(st.t, window_sum / static_cast<double>(window.size())));

    const double w = schedules.beta(st.t);
    weight_total += w;
    if (weight_total > 0.0 && unif(index_rng) * weight_total < w) {
      result.trace.sampled_index = st.t;
      result.output_policy = st.behavior;
    }
  }
  result.final_state = std::move(st);
  return result;
}

Table value_iteration_oracle(const MdpSpec& spec, double tol) {
  if (spec.discount >= 1.0) throw DomainError("value iteration needs discount < 1");
  spec.validate();
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  Table q = Table::Zero(spec.n_states, spec.n_actions);
  // ||TQ - Q|| < tol (1 - psi) puts TQ within tol of the fixed point.
  const double stop = tol * (1.0 - spec.discount);
  for (long it = 0; it < 100000000; ++it) {
    const Eigen::VectorXd v = q.rowwise().maxCoeff();
    Table next(spec.n_states, spec.n_actions);
    for (int s = 0; s < spec.n_states; ++s) {
      next.row(s) = spec.reward.row(s) + spec.discount * (spec.kernel[s] * v).transpose();
    }
    const double change = sup_norm(next - q);
    q = std::move(next);
    if (change < stop) return q;
  }
  throw NumericalError("value iteration did not converge");
}

std::vector<int> greedy_policy(const Table& q) {
  std::vector<int> out(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < q.cols(); ++a) {
      if (q(s, a) > q(s, best)) best = a;
    }
    out[static_cast<std::size_t>(s)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace sopbound::policy
