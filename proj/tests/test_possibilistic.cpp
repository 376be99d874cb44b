#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "oracles.hpp"
#include "sopbound/error.hpp"
#include "sopbound/possibilistic.hpp"
#include "sopbound/random.hpp"

using namespace sopbound;
using namespace sopbound::possibilistic;

namespace {

std::vector<double> random_distribution(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = unif(rng);
  v[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = 1.0;
  return v;
}

Eigen::MatrixXd random_table(Eigen::Index rows, Eigen::Index cols, Rng& rng, bool normalized) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = unif(rng);
  if (normalized) {
    for (Eigen::Index r = 0; r < rows; ++r) t.row(r) /= t.row(r).maxCoeff();
  }
  return t;
}

Mode scalar_mode(const std::string& name, double a, double mean,
                 HoldingTime::Kind kind = HoldingTime::Kind::kExponential) {
  Mode m;
  m.name = name;
  m.dynamics.a1 = Eigen::MatrixXd::Constant(1, 1, a);
  m.dynamics.a2 = Eigen::RowVectorXd::Ones(1);
  m.dynamics.a3 = Eigen::RowVectorXd::Ones(1);
  m.holding = HoldingTime{kind, mean};
  m.unstable = std::abs(a) > 1.0;
  return m;
}

}  // namespace

TEST_CASE("distribution validation") {
  CHECK_NOTHROW(PossibilityDistribution({0.3, 1.0, 0.7}));
  CHECK_THROWS_AS(PossibilityDistribution({0.3, 0.9}), DomainError);
  CHECK_THROWS_AS(PossibilityDistribution({1.0, 1.2}), DomainError);
  CHECK_THROWS_AS(PossibilityDistribution({1.0, -0.1}), DomainError);
}

TEST_CASE("possibility and necessity examples") {
  const PossibilityDistribution d({0.3, 1.0, 0.7});
  CHECK(possibility_of(d, 0b111) == 1.0);
  CHECK(possibility_of(d, 0) == 0.0);
  CHECK(necessity_of(d, 0b111) == 1.0);
  CHECK(necessity_of(d, 0b101) == 0.0);

  const PossibilityDistribution e({0.4, 0.9, 1.0});
  CHECK(possibility_of(e, 0b011) == 0.9);
  CHECK(possibility_of(e, 0b001) == 0.4);

  const PossibilityDistribution two({1.0, 0.2});
  CHECK(necessity_of(two, 0b01) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("axioms hold exhaustively on random distributions") {
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 6);
    const auto values = random_distribution(n, rng);
    const PossibilityDistribution d(values);
    const unsigned full = (1u << n) - 1u;
    CHECK(possibility_of(d, full) == 1.0);
    for (unsigned a = 0; a <= full; ++a) {
      const double pa = possibility_of(d, a);
      CHECK(pa == oracle::sup_over(values, a));
      CHECK(necessity_of(d, a) == doctest::Approx(1.0 - oracle::sup_over(values, full & ~a)));
      CHECK(necessity_of(d, a) <= pa);
      for (unsigned b = 0; b <= full; ++b) {
        const double pb = possibility_of(d, b);
        CHECK(possibility_of(d, a | b) == std::max(pa, pb));
        CHECK(necessity_of(d, a & b) == doctest::Approx(std::min(necessity_of(d, a), necessity_of(d, b))));
      }
    }
  }
}

TEST_CASE("kernel normalisation") {
  Eigen::MatrixXd t(3, 2);
  t << 0.5, 0.25, 0.0, 0.0, 1.0, 0.3;
  const PossibilisticKernel k(t);
  CHECK(k.norm(0) == 0.5);
  CHECK_FALSE(k.normalized());
  const auto n = k.normalize();
  CHECK(n.normalized());
  CHECK(n(0, 1) == 0.5);
  CHECK(n(1, 0) == 1.0);
  CHECK(n(1, 1) == 1.0);
  CHECK(n(2, 1) == 0.3);
  Eigen::MatrixXd bad = t;
  bad(0, 0) = 1.5;
  CHECK_THROWS_AS(PossibilisticKernel{bad}, DomainError);
}

TEST_CASE("condition examples") {
  // Product of marginals: conditional on the first axis is its renormalised marginal.
  PossibilityTable prod{{2, 2}, {}};
  const double u[2] = {1.0, 0.4};
  const double v[2] = {0.6, 1.0};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) prod.values.push_back(u[i] * v[j]);
  }
  const auto k = condition(prod, 0);
  for (int j = 0; j < 2; ++j) {
    CHECK(k(j, 0) == doctest::Approx(1.0));
    CHECK(k(j, 1) == doctest::Approx(0.4));
  }

  PossibilityTable zero_row{{2, 2}, {1.0, 0.5, 0.0, 0.0}};
  const auto z = condition(zero_row, 1);
  CHECK(z(1, 0) == 1.0);
  CHECK(z(1, 1) == 1.0);
  CHECK(z(0, 1) == 0.5);
  CHECK(z.normalized());

  // A certain conditioning value leaves the joint as it is.
  PossibilityTable certain{{3, 2}, {1.0, 0.2, 0.7, 0.0, 0.3, 0.1}};
  const auto c = condition(certain, 0);
  CHECK(c(0, 0) == 1.0);
  CHECK(c(0, 1) == 0.7);
  CHECK(c(0, 2) == 0.3);
  CHECK_THROWS_AS(condition(certain, 2), DomainError);
}

TEST_CASE("max_chain examples") {
  Rng rng = make_rng(5);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  CHECK(max_chain(PossibilisticKernel(id), PossibilisticKernel(id)).table() == id);

  const Eigen::MatrixXd k32 = random_table(3, 4, rng, false);
  Eigen::MatrixXd det = Eigen::MatrixXd::Zero(2, 3);
  det(0, 2) = 1.0;
  det(1, 0) = 1.0;
  const auto out = max_chain(PossibilisticKernel(k32), PossibilisticKernel(det));
  CHECK(out.table().row(0) == k32.row(2));
  CHECK(out.table().row(1) == k32.row(0));
  CHECK_THROWS_AS(max_chain(PossibilisticKernel(id), PossibilisticKernel(k32)), DimensionError);
}

TEST_CASE("max_chain agrees with enumeration on random triples") {
  Rng rng = make_rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n1 = 1 + trial % 4, n2 = 1 + (trial / 4) % 4, n3 = 1 + (trial / 16) % 4;
    const Eigen::MatrixXd k21 = random_table(n1, n2, rng, false);
    const Eigen::MatrixXd k32 = random_table(n2, n3, rng, false);
    const auto got = max_chain(PossibilisticKernel(k32), PossibilisticKernel(k21)).table();
    CHECK((got - oracle::max_chain_by_enumeration(k32, k21)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(got.maxCoeff() <= 1.0);
  }
}

TEST_CASE("max_chain is associative up to row normalisation") {
  Rng rng = make_rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    const PossibilisticKernel k21(random_table(n, n, rng, false));
    const PossibilisticKernel k32(random_table(n, n, rng, true));
    const PossibilisticKernel k43(random_table(n, n, rng, false));
    const auto left = max_chain(k43, max_chain(k32, k21)).normalize().table();
    const auto right = max_chain(max_chain(k43, k32), k21).normalize().table();
    CHECK((left - right).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("inversions agree on normalised quotient rows") {
  Rng rng = make_rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const PossibilityDistribution prior(random_distribution(3, rng));
    const PossibilisticKernel k21(random_table(3, 4, rng, true));
    const auto b = bayes_inverse(prior, k21);
    const auto m = mei_inverse(prior, k21);
    CHECK(b.normalized(1e-12));
    CHECK((b.table() - m.table()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("graph chain joint and text format") {
  std::istringstream text(
      "# two nodes\n"
      "var A 2\n"
      "var B 2 A\n"
      "entry A 1 0.3\n"
      "entry B 1 A=0 0.6   # b1 given a0\n"
      "entry B 0 A=1 0\n");
  const auto g = read_graph(text);
  CHECK(g.size() == 2);
  CHECK(g.normalized());
  CHECK(chain_joint(g, {0, 0}) == 1.0);
  CHECK(chain_joint(g, {0, 1}) == doctest::Approx(0.6));
  CHECK(chain_joint(g, {1, 0}) == 0.0);
  CHECK(chain_joint(g, {1, 1}) == doctest::Approx(0.3));
  CHECK_THROWS_AS(chain_joint(g, {0}), DimensionError);

  std::istringstream bad_parent("var A 2\nvar B 2 C\n");
  CHECK_THROWS_AS(read_graph(bad_parent), DomainError);
  std::istringstream bad_record("node A 2\n");
  CHECK_THROWS_AS(read_graph(bad_record), DomainError);
  std::istringstream missing_parent("var A 2\nvar B 2 A\nentry B 1 0.5\n");
  CHECK_THROWS_AS(read_graph(missing_parent), DomainError);
}

TEST_CASE("alpha cut sampling respects the cut") {
  Rng rng = make_rng(29);
  Eigen::RowVectorXd row(4);
  row << 1.0, 0.5, 0.0, 0.25;
  std::vector<int> hits(4, 0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) ++hits[static_cast<std::size_t>(alpha_cut_sample(row, rng))];
  CHECK(hits[2] == 0);
  // P(j) = integral over u of 1{row_j >= u} / |cut(u)|.
  const double p0 = 0.25 / 3 + 0.25 / 2 + 0.5;
  const double p1 = 0.25 / 3 + 0.25 / 2;
  const double p3 = 0.25 / 3;
  CHECK(hits[0] / double(n) == doctest::Approx(p0).epsilon(0.03));
  CHECK(hits[1] / double(n) == doctest::Approx(p1).epsilon(0.03));
  CHECK(hits[3] / double(n) == doctest::Approx(p3).epsilon(0.05));
  CHECK_THROWS_AS(alpha_cut_sample(Eigen::RowVectorXd::Zero(3), rng), DomainError);
}

TEST_CASE("single deterministic mode jumps on a fixed grid") {
  SemiMarkovSpec spec;
  spec.modes = {scalar_mode("stable", 0.5, 2.5, HoldingTime::Kind::kDeterministic)};
  spec.initial_state = Eigen::VectorXd::Zero(1);
  const auto tr = simulate_semi_markov(spec, 20.0, 1);
  REQUIRE(tr.jump_times.size() == 7);
  for (std::size_t k = 0; k < tr.jump_times.size(); ++k) {
    CHECK(tr.jump_times[k] == doctest::Approx(2.5 * static_cast<double>(k + 1)));
  }
}

TEST_CASE("degenerate kernel keeps every later segment unstable") {
  SemiMarkovSpec spec;
  spec.modes = {scalar_mode("stable", 0.5, 3.0), scalar_mode("unstable", 1.2, 3.0)};
  Eigen::MatrixXd k(2, 2);
  k << 0.0, 1.0, 0.0, 1.0;
  spec.transitions = PossibilisticKernel(k);
  spec.initial_mode = 1;
  spec.initial_state = Eigen::VectorXd::Zero(1);
  const auto tr = simulate_semi_markov(spec, 100.0, 3, SimulateOptions{false});
  for (const auto& s : tr.segments) CHECK(s.mode == 1);
  CHECK(tr.dynamics.empty());
}

TEST_CASE("semi-Markov validation and determinism") {
  SemiMarkovSpec spec;
  spec.modes = {scalar_mode("stable", 0.5, 5.0), scalar_mode("unstable", 1.2, 5.0)};
  spec.transitions = PossibilisticKernel(Eigen::MatrixXd::Ones(2, 2));
  spec.initial_state = Eigen::VectorXd::Constant(1, 0.1);
  const auto a = simulate_semi_markov(spec, 200.0, 9);
  const auto b = simulate_semi_markov(spec, 200.0, 9);
  REQUIRE(a.segments.size() == b.segments.size());
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    CHECK(a.segments[i].mode == b.segments[i].mode);
    CHECK(a.segments[i].holding == b.segments[i].holding);
  }
  REQUIRE(a.dynamics.size() == b.dynamics.size());
  for (std::size_t i = 0; i < a.dynamics.size(); ++i) CHECK(a.dynamics[i].state == b.dynamics[i].state);
  for (const auto& s : a.segments) CHECK(s.holding > 0.0);

  auto mislabelled = spec;
  mislabelled.modes[0].unstable = true;
  CHECK_THROWS_AS(mislabelled.validate(), DomainError);
  auto bad_kernel = spec;
  bad_kernel.transitions = PossibilisticKernel(Eigen::MatrixXd::Ones(3, 3));
  CHECK_THROWS_AS(bad_kernel.validate(), DimensionError);
  CHECK_THROWS_AS(simulate_semi_markov(spec, 0.0, 1), DomainError);
}

TEST_CASE("jump destinations are independent of holding times") {
  SemiMarkovSpec spec;
  spec.modes = {scalar_mode("stable", 0.5, 5.0), scalar_mode("unstable", 1.2, 5.0)};
  Eigen::MatrixXd k(2, 2);
  k << 0.6, 1.0, 1.0, 0.8;
  spec.transitions = PossibilisticKernel(k);
  spec.initial_state = Eigen::VectorXd::Zero(1);
  const auto tr = simulate_semi_markov(spec, 5.0e4, 31, SimulateOptions{false});
  CHECK(tr.jump_times.size() >= 9000);
  const auto rep = jump_independence_test(tr, 2);
  CHECK(rep.statistics.size() == 2);
  CHECK(rep.independent);
  for (std::size_t i = 0; i < rep.statistics.size(); ++i) {
    CHECK(rep.degrees_of_freedom[i] == 3);
    CHECK(rep.critical_values[i] == doctest::Approx(7.8147).epsilon(1e-4));
  }
}

TEST_CASE("independence test rejects a planted dependence") {
  // Destination is 1 exactly when the holding time is long.
  Trajectory tr;
  Rng rng = make_rng(37);
  std::exponential_distribution<double> hold(0.2);
  double t = 0.0;
  int mode = 0;
  for (int k = 0; k < 2000; ++k) {
    const double h = hold(rng);
    tr.segments.push_back({mode, t, h});
    t += h;
    tr.jump_times.push_back(t);
    mode = mode == 0 ? (h > 3.5 ? 1 : 0) : 0;
  }
  tr.segments.push_back({mode, t, 1.0});
  const auto rep = jump_independence_test(tr, 2);
  CHECK_FALSE(rep.independent);
}

TEST_CASE("age example") {
  const auto r = age_example_check();
  CHECK(r.adult_aged_or_middle == 1.0);
  CHECK(r.adult_middle_or_young == 0.5);
  CHECK(r.aged_and_middle == 0.5);
  CHECK(r.reproduces);
}
