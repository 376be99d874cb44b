#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sopbound/channel.hpp"

namespace sopbound::possibilistic {

/// Normalised possibility values over states 0..n-1.
class PossibilityDistribution {
 public:
  /// Throws DomainError unless every value is in [0, 1] and the maximum is 1.
  explicit PossibilityDistribution(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t s) const { return values_[s]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Subsets of a state set of at most 64 states, bit s set when s is a member.
using Subset = std::uint64_t;

/// sup over the subset; 0 for the empty set.
double possibility_of(const PossibilityDistribution& dist, Subset subset);

/// 1 - sup over the complement. The printed form "1 - inf" is not the dual
/// of possibility and is not used.
double necessity_of(const PossibilityDistribution& dist, Subset subset);

/// Conditional table upsilon(to | from), rows indexed by `from`. Rows need
/// not be normalised; norm(s) = max_to upsilon(to | s).
class PossibilisticKernel {
 public:
  explicit PossibilisticKernel(Eigen::MatrixXd table);

  Eigen::Index from_size() const { return table_.rows(); }
  Eigen::Index to_size() const { return table_.cols(); }
  double operator()(Eigen::Index from, Eigen::Index to) const { return table_(from, to); }
  const Eigen::MatrixXd& table() const { return table_; }

  double norm(Eigen::Index from) const;
  bool normalized(double tol = 0.0) const;
  /// Each row divided by its maximum; all-zero rows become all ones.
  PossibilisticKernel normalize() const;

 private:
  Eigen::MatrixXd table_;
};

/// Joint possibility over a product of finite axes, row-major over `dims`
/// (last axis fastest).
struct PossibilityTable {
  std::vector<int> dims;
  std::vector<double> values;

  std::size_t flat_index(const std::vector<int>& assignment) const;
  double at(const std::vector<int>& assignment) const { return values.at(flat_index(assignment)); }
  void validate() const;
};

/// upsilon(s_target | rest) = joint / max_{s_target} joint, or 1 where the
/// marginal of the rest is 0. Rows enumerate the rest in row-major order
/// with the target axis removed; columns are target values.
PossibilisticKernel condition(const PossibilityTable& joint, int target_axis);

/// upsilon(s3 | s1) = (1 / w(s1)) max_{s2} upsilon(s3 | s2) upsilon(s2 | s1)
/// with w(s1) = max_{s2} upsilon(s2 | s1). Rows with w = 0 are all ones.
PossibilisticKernel max_chain(const PossibilisticKernel& k32, const PossibilisticKernel& k21);

/// Plain max-product composition without the normalising factor.
Eigen::MatrixXd max_product(const Eigen::MatrixXd& k32, const Eigen::MatrixXd& k21);

/// upsilon(s1 | s2) by the quotient rule from a prior on s1 and a kernel
/// s1 -> s2: joint / max_{s1} joint, 1 where the s2 marginal is 0.
/// Rows indexed by s2.
PossibilisticKernel bayes_inverse(const PossibilityDistribution& prior,
                                  const PossibilisticKernel& k21);

/// The same inversion in its max-renormalised form:
///   w2(s2) upsilon(s1) upsilon(s2|s1) / max_k upsilon(k) upsilon(s2|k),
/// w2(s2) = max_{s1} of the quotient-rule conditional. Agrees with
/// bayes_inverse whenever the quotient rows are normalised.
PossibilisticKernel mei_inverse(const PossibilityDistribution& prior,
                                const PossibilisticKernel& k21);

/// Directed acyclic graph of finite variables. Tables hold only the entries
/// that differ from 1; absent entries are fully possible.
class PossibilisticGraph {
 public:
  /// Adds a variable after its parents; returns its index.
  int add_node(std::string name, int cardinality, std::vector<int> parents = {});
  /// upsilon(node = value | parents = parent_values) = alpha.
  void set_entry(int node, const std::vector<int>& parent_values, int value, double alpha);

  std::size_t size() const { return nodes_.size(); }
  int index_of(const std::string& name) const;
  const std::string& name(int node) const { return nodes_.at(static_cast<std::size_t>(node)).name; }
  int cardinality(int node) const { return nodes_.at(static_cast<std::size_t>(node)).cardinality; }
  const std::vector<int>& parents(int node) const {
    return nodes_.at(static_cast<std::size_t>(node)).parents;
  }
  double conditional(int node, const std::vector<int>& parent_values, int value) const;

  /// Every parent configuration of every node has a fully possible value.
  bool normalized() const;

 private:
  struct Node {
    std::string name;
    int cardinality;
    std::vector<int> parents;
    std::map<std::vector<int>, double> exceptions;  // key: parent values then value
  };
  std::vector<Node> nodes_;
};

/// prod_i upsilon(s_i | parents(s_i)) for a full assignment.
double chain_joint(const PossibilisticGraph& graph, const std::vector<int>& assignment);

/// Text format, one record per line, '#' starts a comment:
///   var NAME CARDINALITY [PARENT ...]
///   entry NAME VALUE [PARENT=VALUE,...] ALPHA
PossibilisticGraph read_graph(std::istream& in);
PossibilisticGraph read_graph_file(const std::string& path);

struct HoldingTime {
  enum class Kind { kExponential, kDeterministic };
  Kind kind = Kind::kExponential;
  double mean = 5.0;  // mean for exponential, the value for deterministic
};

struct Mode {
  std::string name;
  channel::LinearDynamics dynamics;
  HoldingTime holding;
  bool unstable = false;
};

/// Modes with holding-time samplers, a possibilistic mode-transition kernel
/// and the initial mode and plant state.
struct SemiMarkovSpec {
  std::vector<Mode> modes;
  PossibilisticKernel transitions{Eigen::MatrixXd::Ones(1, 1)};
  int initial_mode = 0;
  Eigen::VectorXd initial_state;

  void validate() const;
};

struct Segment {
  int mode;
  double start;
  double holding;
};

struct DynamicsSample {
  long time;
  int mode;
  Eigen::VectorXd state;
  double observation_bob;
  double observation_eve;
};

struct Trajectory {
  std::vector<Segment> segments;
  std::vector<double> jump_times;  // segment end times inside the horizon
  std::vector<DynamicsSample> dynamics;
};

struct SimulateOptions {
  bool record_dynamics = true;
};

/// alpha-cut sample from a possibility row: u ~ U(0, 1), uniform over
/// {j : row(j) >= u}. The row must have a positive entry.
int alpha_cut_sample(const Eigen::RowVectorXd& row, Rng& rng);

/// Alternating segments up to `horizon`. Mode jumps use alpha-cut sampling
/// of the transition row; the plant is stepped once per unit time with the
/// active mode's dynamics.
Trajectory simulate_semi_markov(const SemiMarkovSpec& spec, double horizon, std::uint64_t seed,
                                const SimulateOptions& options = {});

struct IndependenceReport {
  std::vector<double> statistics;  // chi-square per source mode
  std::vector<int> degrees_of_freedom;
  std::vector<double> critical_values;
  bool independent;
};

/// Chi-square test per source mode that the holding time (quartile bins)
/// is independent of the destination mode, at the 5% level.
IndependenceReport jump_independence_test(const Trajectory& trajectory, int n_modes);

struct AgeExampleReport {
  double adult_aged_or_middle;  // Possibility of aged or middle-aged
  double adult_middle_or_young;
  double aged_and_middle;       // min of the two possibilities
  bool reproduces;              // first value is 1
};

/// The 50-year-old example: aged = 1, middle-aged = 0.5, young = 0.
AgeExampleReport age_example_check();

}  // namespace sopbound::possibilistic
