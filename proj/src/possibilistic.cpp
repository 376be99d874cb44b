#include "sopbound/possibilistic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "sopbound/error.hpp"

namespace sopbound::possibilistic {

namespace {

void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError(fmt::format("{} {} is outside [0, 1]", what, v));
}

Subset full_set(std::size_t n) { return n >= 64 ? ~Subset{0} : (Subset{1} << n) - 1; }

void check_subset(const PossibilityDistribution& dist, Subset subset) {
  if (dist.size() > 64) throw DimensionError("subsets support at most 64 states");
  if ((subset & ~full_set(dist.size())) != 0) throw DomainError("subset has states outside the set");
}

double sup_over(const PossibilityDistribution& dist, Subset subset) {
  double best = 0.0;
  for (std::size_t s = 0; s < dist.size(); ++s) {
    if (subset >> s & 1u) best = std::max(best, dist[s]);
  }
  return best;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

PossibilityDistribution::PossibilityDistribution(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("possibility distribution is empty");
  for (double v : values_) check_unit(v, "possibility value");
  if (*std::max_element(values_.begin(), values_.end()) != 1.0) {
    throw DomainError("possibility distribution is not normalised (max != 1)");
  }
}

double possibility_of(const PossibilityDistribution& dist, Subset subset) {
  check_subset(dist, subset);
  return sup_over(dist, subset);
}

double necessity_of(const PossibilityDistribution& dist, Subset subset) {
  check_subset(dist, subset);
  return 1.0 - sup_over(dist, full_set(dist.size()) & ~subset);
}

PossibilisticKernel::PossibilisticKernel(Eigen::MatrixXd table) : table_(std::move(table)) {
  if (table_.size() == 0) throw DimensionError("kernel is empty");
  for (Eigen::Index i = 0; i < table_.size(); ++i) check_unit(table_.data()[i], "kernel entry");
}

double PossibilisticKernel::norm(Eigen::Index from) const { return table_.row(from).maxCoeff(); }

bool PossibilisticKernel::normalized(double tol) const {
  for (Eigen::Index r = 0; r < table_.rows(); ++r) {
    if (std::abs(norm(r) - 1.0) > tol) return false;
  }
  return true;
}

PossibilisticKernel PossibilisticKernel::normalize() const {
  Eigen::MatrixXd out = table_;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double w = norm(r);
    if (w > 0.0) {
      out.row(r) /= w;
    } else {
      out.row(r).setOnes();
    }
  }
  return PossibilisticKernel(std::move(out));
}

std::size_t PossibilityTable::flat_index(const std::vector<int>& assignment) const {
  if (assignment.size() != dims.size()) throw DimensionError("assignment has the wrong arity");
  std::size_t idx = 0;
  for (std::size_t a = 0; a < dims.size(); ++a) {
    if (assignment[a] < 0 || assignment[a] >= dims[a]) throw DomainError("assignment out of range");
    idx = idx * static_cast<std::size_t>(dims[a]) + static_cast<std::size_t>(assignment[a]);
  }
  return idx;
}

void PossibilityTable::validate() const {
  if (dims.empty()) throw DimensionError("joint table has no axes");
  std::size_t total = 1;
  for (int d : dims) {
    if (d < 1) throw DimensionError("axis sizes must be positive");
    total *= static_cast<std::size_t>(d);
  }
  if (values.size() != total) throw DimensionError("joint table size does not match its axes");
  for (double v : values) check_unit(v, "joint value");
}

PossibilisticKernel condition(const PossibilityTable& joint, int target_axis) {
  joint.validate();
  const int n_axes = static_cast<int>(joint.dims.size());
  if (target_axis < 0 || target_axis >= n_axes) throw DomainError("target axis out of range");
  const int target_size = joint.dims[static_cast<std::size_t>(target_axis)];
  const std::size_t rest_size = joint.values.size() / static_cast<std::size_t>(target_size);

  Eigen::MatrixXd out(static_cast<Eigen::Index>(rest_size), target_size);
  std::vector<int> rest(static_cast<std::size_t>(n_axes - 1), 0);
  std::vector<int> full(static_cast<std::size_t>(n_axes), 0);
  for (std::size_t r = 0; r < rest_size; ++r) {
    // Decode r into the remaining axes, last axis fastest.
    std::size_t code = r;
    for (int a = n_axes - 1, k = n_axes - 2; a >= 0; --a) {
      if (a == target_axis) continue;
      const auto d = static_cast<std::size_t>(joint.dims[static_cast<std::size_t>(a)]);
      rest[static_cast<std::size_t>(k--)] = static_cast<int>(code % d);
      code /= d;
    }
    for (int a = 0, k = 0; a < n_axes; ++a) {
      if (a != target_axis) full[static_cast<std::size_t>(a)] = rest[static_cast<std::size_t>(k++)];
    }
    double marginal = 0.0;
    for (int v = 0; v < target_size; ++v) {
      full[static_cast<std::size_t>(target_axis)] = v;
      marginal = std::max(marginal, joint.at(full));
    }
    for (int v = 0; v < target_size; ++v) {
      full[static_cast<std::size_t>(target_axis)] = v;
      out(static_cast<Eigen::Index>(r), v) = marginal == 0.0 ? 1.0 : joint.at(full) / marginal;
    }
  }
  return PossibilisticKernel(std::move(out));
}

Eigen::MatrixXd max_product(const Eigen::MatrixXd& k32, const Eigen::MatrixXd& k21) {
  if (k21.cols() != k32.rows()) throw DimensionError("kernel state spaces do not chain");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k21.rows(), k32.cols());
  for (Eigen::Index s1 = 0; s1 < k21.rows(); ++s1) {
    for (Eigen::Index s3 = 0; s3 < k32.cols(); ++s3) {
      double best = 0.0;
      for (Eigen::Index s2 = 0; s2 < k21.cols(); ++s2) best = std::max(best, k32(s2, s3) * k21(s1, s2));
      out(s1, s3) = best;
    }
  }
  return out;
}

PossibilisticKernel max_chain(const PossibilisticKernel& k32, const PossibilisticKernel& k21) {
  Eigen::MatrixXd out = max_product(k32.table(), k21.table());
  for (Eigen::Index s1 = 0; s1 < out.rows(); ++s1) {
    const double w = k21.norm(s1);
    if (w > 0.0) {
      out.row(s1) /= w;
    } else {
      out.row(s1).setOnes();
    }
  }
  // Division can leave entries a rounding error above 1.
  return PossibilisticKernel(out.cwiseMin(1.0));
}

PossibilisticKernel bayes_inverse(const PossibilityDistribution& prior,
                                  const PossibilisticKernel& k21) {
  if (static_cast<Eigen::Index>(prior.size()) != k21.from_size()) {
    throw DimensionError("prior and kernel disagree on the s1 states");
  }
  Eigen::MatrixXd out(k21.to_size(), k21.from_size());
  for (Eigen::Index s2 = 0; s2 < k21.to_size(); ++s2) {
    double marginal = 0.0;
    for (Eigen::Index s1 = 0; s1 < k21.from_size(); ++s1) {
      marginal = std::max(marginal, prior[static_cast<std::size_t>(s1)] * k21(s1, s2));
    }
    for (Eigen::Index s1 = 0; s1 < k21.from_size(); ++s1) {
      out(s2, s1) = marginal == 0.0 ? 1.0 : prior[static_cast<std::size_t>(s1)] * k21(s1, s2) / marginal;
    }
  }
  return PossibilisticKernel(out.cwiseMin(1.0));
}

PossibilisticKernel mei_inverse(const PossibilityDistribution& prior,
                                const PossibilisticKernel& k21) {
  const PossibilisticKernel quotient = bayes_inverse(prior, k21);
  Eigen::MatrixXd out(k21.to_size(), k21.from_size());
  for (Eigen::Index s2 = 0; s2 < k21.to_size(); ++s2) {
    const double w2 = quotient.norm(s2);
    double denom = 0.0;
    for (Eigen::Index k = 0; k < k21.from_size(); ++k) {
      denom = std::max(denom, prior[static_cast<std::size_t>(k)] * k21(k, s2));
    }
    for (Eigen::Index s1 = 0; s1 < k21.from_size(); ++s1) {
      out(s2, s1) = denom == 0.0 ? 1.0 : w2 * prior[static_cast<std::size_t>(s1)] * k21(s1, s2) / denom;
    }
  }
  return PossibilisticKernel(out.cwiseMin(1.0));
}

int PossibilisticGraph::add_node(std::string name, int cardinality, std::vector<int> parents) {
  if (cardinality < 1) throw DomainError("node cardinality must be positive");
  if (index_of(name) >= 0) throw DomainError(fmt::format("duplicate node {}", name));
  for (int p : parents) {
    // Parents must already exist, which keeps the graph acyclic.
    if (p < 0 || p >= static_cast<int>(nodes_.size())) {
      throw DomainError(fmt::format("node {} has an undeclared parent", name));
    }
  }
  nodes_.push_back({std::move(name), cardinality, std::move(parents), {}});
  return static_cast<int>(nodes_.size()) - 1;
}

int PossibilisticGraph::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void PossibilisticGraph::set_entry(int node, const std::vector<int>& parent_values, int value,
                                   double alpha) {
  Node& n = nodes_.at(static_cast<std::size_t>(node));
  if (parent_values.size() != n.parents.size()) throw DimensionError("wrong number of parent values");
  for (std::size_t i = 0; i < parent_values.size(); ++i) {
    if (parent_values[i] < 0 || parent_values[i] >= cardinality(n.parents[i])) {
      throw DomainError("parent value out of range");
    }
  }
  if (value < 0 || value >= n.cardinality) throw DomainError("node value out of range");
  check_unit(alpha, "conditional entry");
  std::vector<int> key = parent_values;
  key.push_back(value);
  if (alpha == 1.0) {
    n.exceptions.erase(key);
  } else {
    n.exceptions[key] = alpha;
  }
}

double PossibilisticGraph::conditional(int node, const std::vector<int>& parent_values,
                                       int value) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(node));
  if (parent_values.size() != n.parents.size()) throw DimensionError("wrong number of parent values");
  std::vector<int> key = parent_values;
  key.push_back(value);
  const auto it = n.exceptions.find(key);
  return it == n.exceptions.end() ? 1.0 : it->second;
}

bool PossibilisticGraph::normalized() const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    std::vector<int> config(n.parents.size(), 0);
    while (true) {
      double best = 0.0;
      for (int v = 0; v < n.cardinality; ++v) {
        best = std::max(best, conditional(static_cast<int>(i), config, v));
      }
      if (best != 1.0) return false;
      std::size_t k = 0;
      for (; k < config.size(); ++k) {
        if (++config[k] < cardinality(n.parents[k])) break;
        config[k] = 0;
      }
      if (k == config.size()) break;
    }
  }
  return true;
}

double chain_joint(const PossibilisticGraph& graph, const std::vector<int>& assignment) {
  if (assignment.size() != graph.size()) throw DimensionError("assignment must cover every node");
  double product = 1.0;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const int node = static_cast<int>(i);
    if (assignment[i] < 0 || assignment[i] >= graph.cardinality(node)) {
      throw DomainError(fmt::format("value for {} out of range", graph.name(node)));
    }
    std::vector<int> parent_values;
    for (int p : graph.parents(node)) parent_values.push_back(assignment[static_cast<std::size_t>(p)]);
    product *= graph.conditional(node, parent_values, assignment[i]);
  }
  return product;
}

PossibilisticGraph read_graph(std::istream& in) {
  PossibilisticGraph graph;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    const auto fail = [&](const std::string& why) {
      return DomainError(fmt::format("graph line {}: {}", line_no, why));
    };
    if (kind == "var") {
      std::string name;
      int card = 0;
      if (!(ss >> name >> card)) throw fail("expected 'var NAME CARDINALITY [PARENT ...]'");
      std::vector<int> parents;
      std::string parent;
      while (ss >> parent) {
        const int p = graph.index_of(parent);
        if (p < 0) throw fail(fmt::format("unknown parent {}", parent));
        parents.push_back(p);
      }
      graph.add_node(name, card, parents);
    } else if (kind == "entry") {
      std::vector<std::string> tokens;
      std::string tok;
      while (ss >> tok) tokens.push_back(tok);
      if (tokens.size() < 3 || tokens.size() > 4) {
        throw fail("expected 'entry NAME VALUE [PARENT=VALUE,...] ALPHA'");
      }
      const int node = graph.index_of(tokens[0]);
      if (node < 0) throw fail(fmt::format("unknown node {}", tokens[0]));
      const auto& parents = graph.parents(node);
      std::vector<int> parent_values(parents.size(), -1);
      if (tokens.size() == 4) {
        std::istringstream ps(tokens[2]);
        std::string pair;
        while (std::getline(ps, pair, ',')) {
          const auto eq = pair.find('=');
          if (eq == std::string::npos) throw fail("parent values must be PARENT=VALUE");
          const int p = graph.index_of(pair.substr(0, eq));
          const auto pos = std::find(parents.begin(), parents.end(), p);
          if (p < 0 || pos == parents.end()) throw fail(fmt::format("{} is not a parent", pair.substr(0, eq)));
          parent_values[static_cast<std::size_t>(pos - parents.begin())] = std::stoi(pair.substr(eq + 1));
        }
      }
      if (std::find(parent_values.begin(), parent_values.end(), -1) != parent_values.end()) {
        throw fail("every parent needs a value");
      }
      try {
        graph.set_entry(node, parent_values, std::stoi(tokens[1]), std::stod(tokens.back()));
      } catch (const std::logic_error&) {
        throw fail("malformed number");
      }
    } else {
      throw fail(fmt::format("unknown record '{}'", kind));
    }
  }
  return graph;
}

PossibilisticGraph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError(fmt::format("cannot open graph file {}", path));
  return read_graph(in);
}

void SemiMarkovSpec::validate() const {
  const auto n = static_cast<Eigen::Index>(modes.size());
  if (n == 0) throw DomainError("semi-Markov spec needs at least one mode");
  if (transitions.from_size() != n || transitions.to_size() != n) {
    throw DimensionError("transition kernel must be modes x modes");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(transitions.norm(i) > 0.0)) throw DomainError("every mode needs a possible successor");
  }
  if (initial_mode < 0 || initial_mode >= n) throw DomainError("initial mode out of range");
  for (const Mode& m : modes) {
    if (!(m.holding.mean > 0.0) || !std::isfinite(m.holding.mean)) {
      throw DomainError(fmt::format("mode {} needs a positive holding time", m.name));
    }
    if (m.dynamics.a1.size() != 0) {
      if (m.dynamics.a1.rows() != initial_state.size()) {
        throw DimensionError(fmt::format("mode {} dynamics do not match the initial state", m.name));
      }
      if (channel::spectral_radius(m.dynamics).unstable != m.unstable) {
        throw DomainError(fmt::format("mode {} spectral radius contradicts its stability label", m.name));
      }
    }
  }
}

int alpha_cut_sample(const Eigen::RowVectorXd& row, Rng& rng) {
  if (row.size() == 0 || !(row.maxCoeff() > 0.0)) throw DomainError("row has no possible entry");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // u in (0, max] so the cut is never empty for unnormalised rows.
  const double u = (1.0 - unif(rng)) * row.maxCoeff();
  std::vector<int> cut;
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (row(j) >= u) cut.push_back(static_cast<int>(j));
  }
  std::uniform_int_distribution<std::size_t> pick(0, cut.size() - 1);
  return cut[pick(rng)];
}

Trajectory simulate_semi_markov(const SemiMarkovSpec& spec, double horizon, std::uint64_t seed,
                                const SimulateOptions& options) {
  spec.validate();
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  Rng jump_rng = derive_stream(seed, 0);
  Rng plant_rng = derive_stream(seed, 1);

  Trajectory out;
  int mode = spec.initial_mode;
  double t = 0.0;
  Eigen::VectorXd x = spec.initial_state;
  long step = 0;
  while (t < horizon) {
    const Mode& m = spec.modes[static_cast<std::size_t>(mode)];
    double h = m.holding.mean;
    if (m.holding.kind == HoldingTime::Kind::kExponential) {
      std::exponential_distribution<double> expo(1.0 / m.holding.mean);
      do {
        h = expo(jump_rng);
      } while (!(h > 0.0));
    }
    out.segments.push_back({mode, t, h});
    const double end = t + h;
    if (options.record_dynamics && m.dynamics.a1.size() != 0) {
      for (; static_cast<double>(step) < std::min(end, horizon); ++step) {
        const channel::DynamicsStep ds = channel::step_dynamics(x, m.dynamics, plant_rng);
        out.dynamics.push_back({step, mode, x, ds.observation_bob, ds.observation_eve});
        x = ds.next_state;
        if (!x.allFinite()) throw NumericalError("plant state overflowed during the rollout");
      }
    }
    if (end >= horizon) break;
    out.jump_times.push_back(end);
    mode = alpha_cut_sample(spec.transitions.table().row(mode), jump_rng);
    t = end;
  }
  return out;
}

IndependenceReport jump_independence_test(const Trajectory& trajectory, int n_modes) {
  IndependenceReport report{{}, {}, {}, true};
  const std::size_t jumps = trajectory.jump_times.size();
  for (int src = 0; src < n_modes; ++src) {
    std::vector<double> holds;
    std::vector<int> dests;
    for (std::size_t k = 0; k < jumps; ++k) {
      if (trajectory.segments[k].mode != src) continue;
      holds.push_back(trajectory.segments[k].holding);
      dests.push_back(trajectory.segments[k + 1].mode);
    }
    std::vector<int> present;
    for (int d = 0; d < n_modes; ++d) {
      if (std::find(dests.begin(), dests.end(), d) != dests.end()) present.push_back(d);
    }
    if (holds.size() < 8 || present.size() < 2) continue;

    std::vector<double> sorted = holds;
    std::sort(sorted.begin(), sorted.end());
    const auto quantile = [&](double q) {
      return sorted[static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1))];
    };
    const double cuts[3] = {quantile(0.25), quantile(0.5), quantile(0.75)};
    const std::size_t cols = present.size();
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(4, static_cast<Eigen::Index>(cols));
    for (std::size_t k = 0; k < holds.size(); ++k) {
      const int bin = static_cast<int>(std::upper_bound(cuts, cuts + 3, holds[k]) - cuts);
      const auto col = std::find(present.begin(), present.end(), dests[k]) - present.begin();
      table(bin, col) += 1.0;
    }
    // Empty bins (ties in deterministic holding times) carry no information.
    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < 4; ++r) {
      if (table.row(r).sum() > 0.0) rows.push_back(r);
    }
    if (rows.size() < 2) continue;
    const double total = table.sum();
    double chi2 = 0.0;
    for (Eigen::Index r : rows) {
      for (Eigen::Index c = 0; c < table.cols(); ++c) {
        const double expected = table.row(r).sum() * table.col(c).sum() / total;
        chi2 += (table(r, c) - expected) * (table(r, c) - expected) / expected;
      }
    }
    const int df = static_cast<int>((rows.size() - 1) * (cols - 1));
    const double critical = boost::math::quantile(boost::math::chi_squared(df), 0.95);
    report.statistics.push_back(chi2);
    report.degrees_of_freedom.push_back(df);
    report.critical_values.push_back(critical);
    if (chi2 > critical) report.independent = false;
  }
  return report;
}

AgeExampleReport age_example_check() {
  const PossibilityDistribution age({1.0, 0.5, 0.0});  // aged, middle-aged, young
  constexpr Subset aged = 1u, middle = 2u, young = 4u;
  AgeExampleReport r{};
  r.adult_aged_or_middle = possibility_of(age, aged | middle);
  r.adult_middle_or_young = possibility_of(age, middle | young);
  r.aged_and_middle = std::min(possibility_of(age, aged), possibility_of(age, middle));
  r.reproduces = r.adult_aged_or_middle == 1.0;
  return r;
}

}  // namespace sopbound::possibilistic
