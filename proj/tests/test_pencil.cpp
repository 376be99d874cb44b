#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include <doctest.h>

#include "oracles.hpp"
#include "sopbound/error.hpp"
#include "sopbound/matrix_io.hpp"
#include "sopbound/pencil.hpp"
#include "sopbound/random.hpp"

using namespace sopbound;
using namespace sopbound::pencil;

namespace {

MatrixPencil diag_pencil(std::initializer_list<double> d) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return MatrixPencil(v.asDiagonal(), Eigen::MatrixXcd::Identity(v.size(), v.size()));
}

}  // namespace

TEST_CASE("pencil construction checks shapes and regularity") {
  CHECK_THROWS_AS(MatrixPencil(Eigen::MatrixXcd::Identity(2, 2), Eigen::MatrixXcd::Identity(3, 3)), DimensionError);
  CHECK_THROWS_AS(MatrixPencil(Eigen::MatrixXcd::Ones(2, 3), Eigen::MatrixXcd::Ones(2, 3)), DimensionError);
  // det(B - zA) identically zero.
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(2, 2), a = Eigen::MatrixXcd::Zero(2, 2);
  b(0, 0) = 1.0;
  a(0, 0) = 1.0;
  CHECK_THROWS(MatrixPencil(b, a));
}

TEST_CASE("characteristic polynomial values") {
  const auto id = MatrixPencil(Eigen::MatrixXcd::Identity(3, 3), Eigen::MatrixXcd::Identity(3, 3));
  CHECK(std::abs(char_poly_eval(id, 1.0)) == doctest::Approx(0.0));
  CHECK(char_poly_eval(diag_pencil({2, 3}), 0.0).real() == doctest::Approx(6.0));
}

TEST_CASE("characteristic polynomial matches the root product") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = random_pencil(5, seed);
    const auto eigs = direct_eig_oracle(p);
    REQUIRE(eigs.size() == 5);
    const Complex k = p.a().determinant();
    for (const Complex z : {Complex(0.3, -0.2), Complex(-1.1, 0.7), Complex(2.0, 0.0)}) {
      Complex prod = k;
      for (const auto& e : eigs) prod *= (e - z);
      const Complex det = char_poly_eval(p, z);
      CHECK(std::abs(det - prod) <= 1e-8 * std::max(1.0, std::abs(det)));
    }
    for (const auto& e : eigs) {
      const double scale = p.b().norm() * std::pow(p.b().norm() + std::abs(e) * p.a().norm(), 4);
      CHECK(std::abs(char_poly_eval(p, e)) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("direct oracle examples") {
  auto e = direct_eig_oracle(diag_pencil({1, 2}));
  std::sort(e.begin(), e.end(), [](auto x, auto y) { return x.real() < y.real(); });
  CHECK(e[0].real() == doctest::Approx(1.0));
  CHECK(e[1].real() == doctest::Approx(2.0));

  const auto r = random_pencil(4, 3);
  for (const auto& z : direct_eig_oracle(MatrixPencil(2.0 * r.a(), r.a()))) {
    CHECK(std::abs(z - 2.0) < 1e-9);
  }
}

TEST_CASE("direct oracle with singular A agrees with QZ") {
  Rng rng = make_rng(4);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5;
    const int rank = 2 + trial % 3;
    Eigen::MatrixXd b = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return normal(rng); });
    Eigen::MatrixXd l = Eigen::MatrixXd::NullaryExpr(n, rank, [&] { return normal(rng); });
    Eigen::MatrixXd r = Eigen::MatrixXd::NullaryExpr(rank, n, [&] { return normal(rng); });
    Eigen::MatrixXd a = l * r;
    const auto finite = direct_eig_oracle(MatrixPencil(b.cast<Complex>(), a.cast<Complex>()));
    const auto ref = oracle::qz_eigenvalues(b, a);
    CHECK(finite.size() == static_cast<std::size_t>(rank));
    CHECK(ref.size() == static_cast<std::size_t>(rank));
    for (const auto& z : finite) {
      double best = 1e300;
      for (const auto& w : ref) best = std::min(best, std::abs(z - w));
      CHECK(best < 1e-6 * std::max(1.0, std::abs(z)));
    }
  }
}

TEST_CASE("diagonal pencil counts") {
  const auto p = diag_pencil({0.5, 2.0});
  CHECK(count_eigs_contour(p, Contour::circle(0.0, 1.0)).count == 1);
  CHECK(count_eigs_contour(p, Contour::circle(0.0, 3.0)).count == 2);
  CHECK(count_eigs_contour(p, Contour::circle(10.0, 1.0)).count == 0);
}

TEST_CASE("contour through an eigenvalue is rejected") {
  const auto p = diag_pencil({1.0, 3.0});
  CHECK_THROWS_AS(count_eigs_contour(p, Contour::circle(0.0, 1.0, 128)), ContourTouchesSpectrum);
}

TEST_CASE("random 8x8 pencils on radius 1.5 match the QZ count") {
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 100; ++seed) {
    const auto p = random_pencil(8, seed);
    const auto ref = oracle::qz_eigenvalues(p.b().real(), p.a().real());
    if (oracle::min_distance_to_circle(ref, 0.0, 1.5) < 1e-6 * 1.5) continue;
    const auto r = count_eigs_contour(p, Contour::circle(0.0, 1.5));
    CHECK(r.count == oracle::count_in_disk(ref, 0.0, 1.5));
    CHECK(r.residual < 0.25);
    ++checked;
  }
}

TEST_CASE("counts are monotone in the radius") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = random_pencil(6, seed);
    int prev = 0;
    for (double r = 0.25; r <= 4.0; r += 0.25) {
      try {
        const int c = count_eigs_contour(p, Contour::circle(0.0, r)).count;
        CHECK(c >= prev);
        prev = c;
      } catch (const NumericalError&) {
        // a radius landing on the spectrum; the next one continues the sequence
      }
    }
  }
}

TEST_CASE("doubling nodes does not blow up the residual") {
  int reduced = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto p = random_pencil(6, seed);
    const auto ref = oracle::qz_eigenvalues(p.b().real(), p.a().real());
    if (oracle::min_distance_to_circle(ref, 0.0, 1.0) < 0.05) continue;
    CountOptions one_shot;
    one_shot.require_agreement = false;
    one_shot.accept_residual = 0.5;
    const auto r1 = count_eigs_contour(p, Contour::circle(0.0, 1.0, 32), one_shot);
    const auto r2 = count_eigs_contour(p, Contour::circle(0.0, 1.0, 64), one_shot);
    CHECK(r2.residual <= 2.0 * r1.residual + 1e-14);
    reduced += r2.residual <= r1.residual ? 1 : 0;
    ++total;
  }
  CHECK(reduced * 2 > total);
}

TEST_CASE("an eigenvalue hugging the contour never yields a wrong count") {
  // Seed 98 (n = 12) has an eigenvalue about 5e-5 from the circle of radius
  // 0.5; at some node counts the aliasing term lands near an integer.
  const auto p = random_pencil(12, 98);
  const auto ref = oracle::qz_eigenvalues(p.b().real(), p.a().real());
  REQUIRE(oracle::min_distance_to_circle(ref, 0.0, 0.5) < 1e-4);
  std::optional<int> count;
  try {
    count = count_eigs_contour(p, Contour::circle(0.0, 0.5)).count;
  } catch (const UnreliableCount&) {
  }
  if (count) CHECK(*count == oracle::count_in_disk(ref, 0.0, 0.5));
  for (int nodes : {128, 256, 512, 1024, 2048, 4096, 8192}) {
    CountOptions single;
    single.require_agreement = false;
    single.accept_residual = 1.0;
    const auto r = count_eigs_contour(p, Contour::circle(0.0, 0.5, nodes), single);
    CHECK(r.nodes_used == nodes);
  }
}

TEST_CASE("keyhole and circle agree when they enclose the same eigenvalues") {
  int compared = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto p = random_pencil(6, seed);
    const auto eigs = direct_eig_oracle(p);
    Keyhole k;
    k.outer_radius = 1.3;
    k.inner_radius = 0.05;
    k.slit_half_width = 0.02;
    // Put the slit in the widest angular gap of the spectrum.
    std::vector<double> args;
    for (const auto& z : eigs) args.push_back(std::arg(z));
    std::sort(args.begin(), args.end());
    double best_gap = args.front() + 2.0 * std::numbers::pi - args.back();
    k.slit_angle = args.back() + 0.5 * best_gap;
    for (std::size_t i = 1; i < args.size(); ++i) {
      if (args[i] - args[i - 1] > best_gap) {
        best_gap = args[i] - args[i - 1];
        k.slit_angle = 0.5 * (args[i] + args[i - 1]);
      }
    }
    const auto circle = Contour::circle(0.0, 1.3);
    const auto key = Contour::keyhole(k, 256);
    bool same = true;
    for (const auto& z : eigs) same = same && encloses(circle, z) == encloses(key, z);
    if (!same || oracle::min_distance_to_circle(eigs, 0.0, 1.3) < 1e-3) continue;
    CHECK(count_eigs_contour(p, key).count == count_eigs_contour(p, circle).count);
    ++compared;
  }
  CHECK(compared >= 30);
}

TEST_CASE("finsler search") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  const auto c = finsler_search(id, id, 0.5, {1.0});
  REQUIRE(c.has_value());
  CHECK(c->z_value == 1.0);
  CHECK(c->lambda_max == doctest::Approx(0.0));
  CHECK_FALSE(finsler_search(Eigen::MatrixXd::Zero(2, 2), id, 0.5, default_finsler_grid()).has_value());

  Rng rng = make_rng(2);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd g = Eigen::MatrixXd::NullaryExpr(4, 4, [&] { return normal(rng); });
    const Eigen::MatrixXd a = g * g.transpose() + 0.1 * Eigen::MatrixXd::Identity(4, 4);
    const Eigen::MatrixXd b = Eigen::MatrixXd::NullaryExpr(4, 4, [&] { return normal(rng); });
    const auto cert = finsler_search(a, b, 0.0, default_finsler_grid());
    REQUIRE(cert.has_value());
    const Eigen::MatrixXd m = b - cert->z_value * a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(cert->lambda_max).epsilon(1e-9));
    CHECK(cert->lambda_max < 0.0);
  }
  const auto grid = default_finsler_grid();
  CHECK(grid.size() == 202);
}

TEST_CASE("davis kahan examples") {
  const Eigen::MatrixXd m0 = Eigen::Vector3d(1.0, 2.0, 4.0).asDiagonal();
  const auto same = davis_kahan_check(m0, m0, 1);
  CHECK(same.sin_angle == doctest::Approx(0.0));
  CHECK(same.bound == 0.0);
  CHECK(same.holds);

  const Eigen::MatrixXd a = Eigen::Vector2d(1.0, 5.0).asDiagonal();
  const Eigen::MatrixXd b = Eigen::Vector2d(1.1, 5.0).asDiagonal();
  const auto r = davis_kahan_check(a, b, 1);
  CHECK(r.sin_angle == doctest::Approx(0.0));
  CHECK(r.gap == doctest::Approx(4.0));
  CHECK(r.bound == doctest::Approx(2.0 * 0.1 / 4.0));

  const Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 2.0);
  CHECK(davis_kahan_check(one, one, 0).bound == 0.0);
  CHECK_THROWS_AS(davis_kahan_check(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2), 0), DomainError);
}

TEST_CASE("davis kahan sine agrees with a direct angle computation") {
  Rng rng = make_rng(21);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd g = Eigen::MatrixXd::NullaryExpr(4, 4, [&] { return normal(rng); });
    const Eigen::MatrixXd m0 = g + g.transpose();
    Eigen::MatrixXd e = Eigen::MatrixXd::NullaryExpr(4, 4, [&] { return normal(rng); });
    const Eigen::MatrixXd m1 = m0 + 1e-3 * (e + e.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s0(m0), s1(m1);
    const auto r = davis_kahan_check(m0, m1, 2);
    CHECK(r.sin_angle == doctest::Approx(oracle::sin_angle(s0.eigenvectors().col(2), s1.eigenvectors().col(2))).epsilon(1e-6));
    CHECK(r.holds);
  }
}

TEST_CASE("contour radius hook is the declared linear map") {
  CHECK(contour_radius_hook(0.2, 0.5) == doctest::Approx(1.4));
  CHECK_THROWS_AS(contour_radius_hook(0.2, 0.0), DomainError);
}

TEST_CASE("pencil text round trip") {
  const auto p = random_pencil(3, 8);
  std::stringstream ss;
  io::write_pencil(ss, p);
  const auto q = io::read_pencil(ss);
  CHECK((p.b() - q.b()).norm() == 0.0);
  CHECK((p.a() - q.a()).norm() == 0.0);
  CHECK(io::parse_complex("1.5-2j") == Complex(1.5, -2.0));
  CHECK(io::parse_complex("3") == Complex(3.0, 0.0));
  CHECK(io::parse_inline_matrix("1 2; 3 4").rows() == 2);
}
