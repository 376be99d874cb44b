#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "sopbound/error.hpp"
#include "sopbound/random.hpp"
#include "sopbound/volume.hpp"

using namespace sopbound;
using namespace sopbound::volume;

namespace {

std::vector<double> draw(std::size_t n, std::uint64_t seed, auto dist) {
  Rng rng = make_rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

std::vector<double> exponential(std::size_t n, std::uint64_t seed) {
  return draw(n, seed, std::exponential_distribution<double>(1.0));
}

}  // namespace

TEST_CASE("empirical sop counts samples at or above lambda") {
  EmpiricalDistribution d({1, 2, 3, 4});
  CHECK(empirical_sop(d, 2.5) == 0.5);
  CHECK(empirical_sop(d, 0.0) == 1.0);
  CHECK(empirical_sop(d, 9.0) == 0.0);
  CHECK(empirical_sop(d, 2.0) == 0.75);

  EmpiricalDistribution w({1, 2, 3}, {0.5, 0.25, 0.25});
  CHECK(empirical_sop(w, 2.0) == doctest::Approx(0.5));
}

TEST_CASE("empirical sop is non-increasing in lambda") {
  EmpiricalDistribution d(exponential(2000, 3));
  double prev = 1.0;
  for (double l = -1.0; l < 8.0; l += 0.01) {
    const double p = empirical_sop(d, l);
    CHECK(p <= prev);
    CHECK(p >= 0.0);
    prev = p;
  }
}

TEST_CASE("distribution validation") {
  CHECK_THROWS(EmpiricalDistribution(std::vector<double>{}));
  CHECK_THROWS(EmpiricalDistribution({1.0, NAN}));
  CHECK_THROWS(EmpiricalDistribution({1.0, 2.0}, {0.5, 0.6}));
  CHECK_THROWS(EmpiricalDistribution({1.0, 2.0}, {-0.5, 1.5}));
  CHECK_THROWS(ThresholdSet({1.0, 1.0}));
  CHECK_THROWS(ThresholdSet({}));
}

TEST_CASE("traditional sop counts ratios below 2^rs") {
  const std::vector<double> e{1, 1, 1, 1};
  CHECK(traditional_sop(std::vector<double>{4, 4, 4, 4}, e, 1.0) == 0.0);
  CHECK(traditional_sop(std::vector<double>{1, 1, 1, 1}, e, 1.0) == 1.0);
  CHECK(traditional_sop(std::vector<double>{1, 3, 5, 9}, e, 2.0) == 0.5);
  CHECK_THROWS(traditional_sop(std::vector<double>{1, 2}, e, 1.0));
}

TEST_CASE("mgf closed forms") {
  EmpiricalDistribution c({1.0, 1.0, 1.0});
  CHECK(mgf(c, 0.5) == doctest::Approx(std::exp(0.5)));
  CHECK(mgf(c, 0.0) == 1.0);
  EmpiricalDistribution e(exponential(200000, 1));
  CHECK(mgf(e, 0.5) == doctest::Approx(2.0).epsilon(0.03));
  EmpiricalDistribution big({1000.0});
  CHECK_THROWS_AS(mgf(big, 1.0), NumericalError);
}

TEST_CASE("expectation bound") {
  EmpiricalDistribution e(exponential(200000, 2));
  const auto r = expectation_bound(e, 0.5);
  CHECK(r.holds);
  CHECK(r.lhs == doctest::Approx(1.0).epsilon(0.02));
  CHECK(r.rhs == doctest::Approx(2.0).epsilon(0.03));

  EmpiricalDistribution zero({0.0, 0.0});
  const auto z = expectation_bound(zero, 1.0);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  CHECK(z.holds);

  // rhs - lhs <= t c^2 for a constant c as t -> 0+.
  const double c = 1.7;
  EmpiricalDistribution k({c});
  for (double t : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const auto r2 = expectation_bound(k, t);
    CHECK(r2.slack >= 0.0);
    CHECK(r2.slack <= t * c * c);
  }
  CHECK_THROWS_AS(expectation_bound(e, 0.0), DomainError);
}

TEST_CASE("expectation bound holds for random non-negative sets") {
  Rng rng = make_rng(77);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(50);
    for (auto& x : v) x = u(rng) * u(rng);
    for (double t : {0.01, 0.1, 0.5, 1.0, 2.0}) CHECK(expectation_bound(EmpiricalDistribution(v), t).holds);
  }
}

TEST_CASE("chernoff relation examples") {
  EmpiricalDistribution c({2.0});
  const auto a = chernoff_relation(c, 0.7, 1.5);
  CHECK(a.lhs == doctest::Approx(std::exp(0.7 * 1.5)));
  CHECK(a.rhs == doctest::Approx(std::exp(0.7 * 2.0)));
  CHECK(a.holds);

  EmpiricalDistribution e(exponential(200000, 4));
  const auto b = chernoff_relation(e, 0.5, 1.0);
  CHECK(b.lhs == doctest::Approx(std::exp(-0.5)).epsilon(0.02));
  CHECK(b.holds);
  CHECK(chernoff_relation(e, 0.5, 1e6).lhs == 0.0);
}

TEST_CASE("chernoff relation holds for random distributions and t in (0, 5]") {
  Rng rng = make_rng(8);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> v(100), w(100);
    for (auto& x : v) x = normal(rng);
    for (auto& x : w) x = u(rng);
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= s;
    EmpiricalDistribution d(v, w);
    for (double t = 0.25; t <= 5.0; t += 0.25) {
      for (double l = -3.0; l <= 3.0; l += 0.25) CHECK(chernoff_relation(d, t, l).holds);
    }
  }
}

TEST_CASE("volume of uniform and gaussian samples") {
  const auto u01 = draw(100000, 1, std::uniform_real_distribution<double>(0.0, 1.0));
  const auto u02 = draw(100000, 2, std::uniform_real_distribution<double>(0.0, 2.0));
  const auto g1 = draw(100000, 3, std::normal_distribution<double>(0.0, 1.0));
  for (auto est : {EntropyEstimator::kSpacing, EntropyEstimator::kHistogram}) {
    CHECK(volume_of(u01, est).volume == doctest::Approx(1.0).epsilon(0.05));
    CHECK(volume_of(u02, est).volume == doctest::Approx(2.0).epsilon(0.05));
    CHECK(volume_of(g1, est).volume == doctest::Approx(oracle::gaussian_volume(1.0)).epsilon(0.05));
    const auto v = volume_of(g1, est);
    CHECK(v.volume == doctest::Approx(std::exp(v.entropy)).epsilon(1e-12));
  }
}

TEST_CASE("volume is scale covariant") {
  const auto g = draw(50000, 4, std::normal_distribution<double>(0.0, 1.0));
  const double base = volume_of(g).volume;
  for (double c : {0.1, 3.0, 25.0}) {
    std::vector<double> s = g;
    for (auto& x : s) x *= c;
    CHECK(volume_of(s).volume == doctest::Approx(c * base).epsilon(0.05));
  }
}

TEST_CASE("degenerate and small samples") {
  const std::vector<double> same(100, 3.0);
  const auto v = volume_of(same);
  CHECK(v.volume == 0.0);
  CHECK(std::isinf(v.entropy));
  CHECK_THROWS(volume_of(std::vector<double>(10, 1.0)));
}

TEST_CASE("vitale check cases") {
  const auto a = draw(20000, 5, std::uniform_real_distribution<double>(0.0, 1.0));
  const std::vector<std::vector<double>> same{a, a};
  const auto r = vitale_check(same);
  CHECK(r.holds);
  CHECK(r.lhs == doctest::Approx(r.rhs).epsilon(0.02));

  const auto b = draw(20000, 6, std::uniform_real_distribution<double>(5.0, 6.0));
  const std::vector<std::vector<double>> disjoint{a, b};
  const auto d = vitale_check(disjoint);
  CHECK(d.holds);
  CHECK(d.rhs > d.lhs);

  std::vector<std::vector<double>> shifted;
  for (int k = 0; k < 4; ++k) shifted.push_back(draw(5000, 10 + k, std::normal_distribution<double>(k, 1.0)));
  CHECK(vitale_check(shifted).holds);
  CHECK_THROWS(vitale_check(std::vector<std::vector<double>>{a}));
}

TEST_CASE("dual objective examples") {
  EmpiricalDistribution e(exponential(10000, 7));
  const auto d0 = dual_objective(e, ThresholdSet({0.0}), 1.0);
  CHECK(d0.product_form == 1.0);
  CHECK_FALSE(d0.sum_form.has_value());

  EmpiricalDistribution c({3.0});
  CHECK(dual_objective(c, ThresholdSet({1.5}), 0.4).product_form == doctest::Approx(std::exp(0.6)));

  std::vector<double> grid(20);
  for (int i = 0; i < 20; ++i) grid[i] = 4.0 * i / 19.0;
  const auto d = dual_objective(e, ThresholdSet(grid), 0.25);
  REQUIRE(d.sum_form.has_value());
  CHECK(std::isfinite(d.product_form));
  CHECK(std::isfinite(*d.sum_form));
  CHECK(d.report.has_value());
}

TEST_CASE("talagrand and convex bounds") {
  EmpiricalDistribution ones({1.0, 2.0});
  CHECK(talagrand_bound(ones, 0.0) == 0.0);
  CHECK(talagrand_bound(ones, 50.0) == doctest::Approx(1.0));
  std::vector<double> v(100, 1.0);
  v[0] = -1.0;  // p = 0.99
  EmpiricalDistribution d(v);
  CHECK(talagrand_bound(d, 0.1) == 0.0);
  double prev = 0.0;
  for (double rho = 0.0; rho < 3.0; rho += 0.05) {
    const double b = talagrand_bound(d, rho);
    CHECK(b >= prev);
    prev = b;
  }
  CHECK(sop_convex_bound(0.0, 1.0) == 1.0);
  CHECK(sop_convex_bound(0.2, 0.5) == doctest::Approx(1.9216).epsilon(1e-4));
  CHECK_THROWS_AS(sop_convex_bound(0.1, 0.0), DomainError);
  CHECK_THROWS_AS(talagrand_bound(EmpiricalDistribution({-1.0}), 0.1), DomainError);
}

TEST_CASE("greedy search matches exhaustive search for the expected-volume objective") {
  // The objective is a sum of per-threshold terms, so coordinate ascent
  // reaches the global optimum.
  Rng rng = make_rng(12);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> v(400);
    for (auto& x : v) x = std::exp(normal(rng));
    EmpiricalDistribution d(v);
    const auto grid = quantile_grid(d, 10 + trial % 3);
    for (std::size_t n = 1; n <= 3; ++n) {
      const auto obj = GreedyObjective::kExpectedVolume;
      const auto greedy = greedy_threshold_search(d, grid, n, obj);
      const auto best = oracle::best_subset(grid, n, [&](const std::vector<double>& s) {
        return threshold_objective(d, s, obj, 1.0);
      });
      const std::vector<double> got(greedy.thresholds.values().begin(), greedy.thresholds.values().end());
      CHECK(got == best);
    }
  }
}

TEST_CASE("greedy sop proxy is exhaustive for n = 1 and a local optimum beyond") {
  Rng rng = make_rng(13);
  std::normal_distribution<double> normal;
  int global = 0, total = 0;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> v(400);
    for (auto& x : v) x = std::exp(normal(rng));
    EmpiricalDistribution d(v);
    const auto grid = quantile_grid(d, 10 + trial % 3);
    const auto obj = GreedyObjective::kSopVolumeProxy;
    const auto f = [&](const std::vector<double>& s) { return threshold_objective(d, s, obj, 1.0); };
    for (std::size_t n = 1; n <= 3; ++n) {
      const auto greedy = greedy_threshold_search(d, grid, n, obj);
      const std::vector<double> got(greedy.thresholds.values().begin(), greedy.thresholds.values().end());
      const auto best = oracle::best_subset(grid, n, f);
      if (n == 1) CHECK(got == best);
      ++total;
      global += got == best ? 1 : 0;
      // No single replacement improves the returned set.
      for (std::size_t pos = 0; pos < n; ++pos) {
        for (double g : grid) {
          if (std::find(got.begin(), got.end(), g) != got.end()) continue;
          auto c = got;
          c[pos] = g;
          std::sort(c.begin(), c.end());
          CHECK(f(c) <= greedy.objective);
        }
      }
    }
  }
  MESSAGE("sop proxy: greedy reached the exhaustive optimum in " << global << "/" << total << " cases");
}

TEST_CASE("greedy single threshold on a symmetric distribution is the median") {
  std::vector<double> v;
  for (int i = -500; i <= 500; ++i) v.push_back(i * 0.01);
  EmpiricalDistribution d(v);
  const auto grid = quantile_grid(d, 11);
  const auto r = greedy_threshold_search(d, grid, 1, GreedyObjective::kSopVolumeProxy);
  // The proxy exp(H(p)) peaks where Pr(L >= l) is closest to 1/2.
  CHECK(r.thresholds.values()[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("greedy on a constant distribution keeps the lowest grid point") {
  EmpiricalDistribution d(std::vector<double>(100, 2.0));
  const auto grid = quantile_grid(d, 64);
  REQUIRE(grid.size() == 1);
  const auto r = greedy_threshold_search(d, 1, GreedyObjective::kSopVolumeProxy);
  CHECK(r.thresholds.values()[0] == 2.0);
  CHECK_THROWS_AS(greedy_threshold_search(d, 2, GreedyObjective::kExpectedVolume), DomainError);
}

TEST_CASE("greedy moves strictly improve and evaluations accumulate") {
  EmpiricalDistribution d(exponential(5000, 9));
  const auto r = greedy_threshold_search(d, 4, GreedyObjective::kExpectedVolume);
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    CHECK(r.history[i].objective > r.history[i - 1].objective);
    CHECK(r.history[i].evaluations > r.history[i - 1].evaluations);
  }
  CHECK(r.history.size() <= GreedyOptions{}.max_iters + 1);
  CHECK(parse_objective(to_string(GreedyObjective::kSopVolumeProxy)) == GreedyObjective::kSopVolumeProxy);
  CHECK_THROWS(parse_objective("nope"));
}
