#include "sopbound/pencil.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "sopbound/error.hpp"
#include "sopbound/random.hpp"

namespace sopbound::pencil {

namespace {

// Eigen's rcond estimate reports 1 for an exactly zero pivot, so pivots are
// checked first.
double safe_rcond(const Eigen::PartialPivLU<Eigen::MatrixXcd>& lu) {
  const auto pivots = lu.matrixLU().diagonal().cwiseAbs();
  if (!pivots.allFinite() || pivots.minCoeff() == 0.0) return 0.0;
  return lu.rcond();
}

using std::numbers::pi;
constexpr Complex kI{0.0, 1.0};
constexpr int kPanelOrder = 16;

// Probe points for the regularity test and shifts for the oracle. Fixed so
// that results do not depend on any global RNG state.
constexpr std::array<Complex, 3> kProbePoints{Complex{0.3711, 0.1234}, Complex{-1.27, 0.81},
                                              Complex{2.113, -1.47}};
constexpr std::array<Complex, 6> kShifts{Complex{0.4137, 0.2291}, Complex{-0.7753, 1.1062},
                                         Complex{1.9311, -0.5127}, Complex{-2.4417, -1.8833},
                                         Complex{3.3301, 2.7712}, Complex{-0.1234, -3.9871}};

Eigen::MatrixXcd shifted(const MatrixPencil& p, Complex z) { return p.b() - z * p.a(); }

// Gauss-Legendre nodes and weights on [-1, 1] via Newton iteration on P_n.
struct GaussRule {
  std::array<double, kPanelOrder> x;
  std::array<double, kPanelOrder> w;
};

const GaussRule& gauss_rule() {
  static const GaussRule rule = [] {
    GaussRule r{};
    const int n = kPanelOrder;
    for (int i = 0; i < n; ++i) {
      double x = std::cos(pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      r.x[i] = x;
      r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
  }();
  return rule;
}

// Composite Gauss-Legendre on a parameterised piece z(s), s in [0, 1].
template <typename Path, typename Deriv>
void add_piece(std::vector<QuadratureNode>& out, int panels, Path path, Deriv deriv) {
  const GaussRule& rule = gauss_rule();
  for (int p = 0; p < panels; ++p) {
    const double a = static_cast<double>(p) / panels;
    const double half = 0.5 / panels;
    for (int k = 0; k < kPanelOrder; ++k) {
      const double s = a + half * (rule.x[k] + 1.0);
      out.push_back({path(s), rule.w[k] * half * deriv(s)});
    }
  }
}

std::vector<QuadratureNode> circle_nodes(const Circle& c, int m) {
  std::vector<QuadratureNode> nodes;
  nodes.reserve(m);
  for (int k = 0; k < m; ++k) {
    const double theta = 2.0 * pi * k / m;
    const Complex offset = c.radius * std::exp(kI * theta);
    nodes.push_back({c.center + offset, kI * offset * (2.0 * pi / m)});
  }
  return nodes;
}

std::vector<QuadratureNode> keyhole_nodes(const Keyhole& k, int m) {
  const double big_r = k.outer_radius;
  const double small_r = k.inner_radius;
  const double lo = k.slit_angle + k.slit_half_width;            // start of the outer arc
  const double sweep = 2.0 * pi - 2.0 * k.slit_half_width;       // angular extent of both arcs
  const double hi = lo + sweep;
  const double lengths[4] = {big_r * sweep, big_r - small_r, small_r * sweep, big_r - small_r};
  const double total = lengths[0] + lengths[1] + lengths[2] + lengths[3];
  const int total_panels = std::max(4, m / kPanelOrder);
  int panels[4];
  for (int i = 0; i < 4; ++i) {
    panels[i] = std::max(1, static_cast<int>(std::lround(total_panels * lengths[i] / total)));
  }
  const Complex c = k.center;
  std::vector<QuadratureNode> nodes;
  // Outer arc, anticlockwise.
  add_piece(nodes, panels[0], [&](double s) { return c + big_r * std::exp(kI * (lo + sweep * s)); },
            [&](double s) { return kI * sweep * big_r * std::exp(kI * (lo + sweep * s)); });
  // Inward along the edge at angle `hi`.
  const Complex dir_hi = std::exp(kI * hi);
  add_piece(nodes, panels[1], [&](double s) { return c + (big_r - (big_r - small_r) * s) * dir_hi; },
            [&](double) { return -(big_r - small_r) * dir_hi; });
  // Inner arc, clockwise from `hi` back to `lo`.
  add_piece(nodes, panels[2], [&](double s) { return c + small_r * std::exp(kI * (hi - sweep * s)); },
            [&](double s) { return -kI * sweep * small_r * std::exp(kI * (hi - sweep * s)); });
  // Outward along the edge at angle `lo`.
  const Complex dir_lo = std::exp(kI * lo);
  add_piece(nodes, panels[3], [&](double s) { return c + (small_r + (big_r - small_r) * s) * dir_lo; },
            [&](double) { return (big_r - small_r) * dir_lo; });
  return nodes;
}

void validate(const Contour& contour) {
  if (contour.nodes < 16) throw DomainError("contour needs at least 16 quadrature nodes");
  if (const auto* c = std::get_if<Circle>(&contour.shape)) {
    if (!(c->radius > 0.0)) throw DomainError("circle radius must be positive");
  } else {
    const auto& k = std::get<Keyhole>(contour.shape);
    if (!(k.inner_radius > 0.0) || !(k.outer_radius > k.inner_radius)) {
      throw DomainError("keyhole needs 0 < inner radius < outer radius");
    }
    if (!(k.slit_half_width > 0.0) || !(k.slit_half_width < pi)) {
      throw DomainError("keyhole slit half-width must lie in (0, pi)");
    }
  }
}

double principal_angle_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * pi);
  return d > pi ? 2.0 * pi - d : d;
}

}  // namespace

MatrixPencil::MatrixPencil(Eigen::MatrixXcd b_matrix, Eigen::MatrixXcd a_matrix)
    : b_(std::move(b_matrix)), a_(std::move(a_matrix)) {
  if (b_.rows() != b_.cols() || a_.rows() != a_.cols() || b_.rows() != a_.rows() || b_.rows() == 0) {
    throw DimensionError("pencil matrices must be square, non-empty and of equal size");
  }
  const bool regular = std::any_of(kProbePoints.begin(), kProbePoints.end(), [&](Complex z) {
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted(*this, z));
    return safe_rcond(lu) > 1e-14;
  });
  if (!regular) throw DomainError("pencil is singular: det(B - zA) vanishes at every probe point");
}

Contour Contour::circle(Complex center, double radius, int nodes) {
  return Contour{Circle{center, radius}, nodes};
}

Contour Contour::keyhole(const Keyhole& k, int nodes) { return Contour{k, nodes}; }

std::vector<QuadratureNode> quadrature(const Contour& contour) {
  validate(contour);
  if (const auto* c = std::get_if<Circle>(&contour.shape)) return circle_nodes(*c, contour.nodes);
  return keyhole_nodes(std::get<Keyhole>(contour.shape), contour.nodes);
}

bool encloses(const Contour& contour, Complex z) {
  if (const auto* c = std::get_if<Circle>(&contour.shape)) return std::abs(z - c->center) < c->radius;
  const auto& k = std::get<Keyhole>(contour.shape);
  const double r = std::abs(z - k.center);
  if (!(r > k.inner_radius && r < k.outer_radius)) return false;
  return principal_angle_distance(std::arg(z - k.center), k.slit_angle) > k.slit_half_width;
}

Complex char_poly_eval(const MatrixPencil& pencil, Complex z) {
  return Eigen::PartialPivLU<Eigen::MatrixXcd>(shifted(pencil, z)).determinant();
}

Complex log_derivative(const MatrixPencil& pencil, Complex z) {
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted(pencil, z));
  return -lu.solve(pencil.a()).trace();
}

EigCountResult count_eigs_contour(const MatrixPencil& pencil, const Contour& contour,
                                  const CountOptions& options) {
  validate(contour);
  Contour current = contour;
  EigCountResult result{};
  double change = std::numeric_limits<double>::infinity();
  std::optional<Complex> previous;
  for (;;) {
    const std::vector<QuadratureNode> nodes = quadrature(current);
    Complex integral{0.0, 0.0};
    for (const QuadratureNode& node : nodes) {
      Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted(pencil, node.z));
      if (!(safe_rcond(lu) > options.min_rcond)) {
        throw ContourTouchesSpectrum("contour passes through the spectrum near z = (" +
                                     std::to_string(node.z.real()) + ", " +
                                     std::to_string(node.z.imag()) + ")");
      }
      integral += node.w * (-lu.solve(pencil.a()).trace());
    }
    const Complex scaled = integral / (2.0 * pi * kI);
    const double rounded = std::round(scaled.real());
    result.raw_integral = integral;
    result.count = static_cast<int>(std::max(0.0, rounded));
    result.residual = std::abs(scaled - Complex(result.count, 0.0));
    result.nodes_used = current.nodes;
    if (!options.require_agreement) {
      change = 0.0;
      break;
    }
    if (previous) change = std::abs(scaled - *previous);
    previous = scaled;
    if ((result.residual < options.target_residual && change < options.target_residual) ||
        current.nodes * 2 > options.max_nodes) {
      break;
    }
    current.nodes *= 2;
  }
  if (!(result.residual < options.accept_residual && change < options.accept_residual)) {
    throw UnreliableCount("contour count residual " + std::to_string(result.residual) + ", change " +
                          std::to_string(change) + " at " + std::to_string(result.nodes_used) +
                          " nodes; increase the node count or move the contour");
  }
  return result;
}

std::vector<Complex> direct_eig_oracle(const MatrixPencil& pencil) {
  const Eigen::Index n = pencil.dim();
  if (n > 64) throw DimensionError("direct_eig_oracle is limited to n <= 64");
  std::vector<Complex> out;
  Eigen::PartialPivLU<Eigen::MatrixXcd> a_lu(pencil.a());
  if (safe_rcond(a_lu) > 1e-10) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(a_lu.solve(pencil.b()), false);
    if (solver.info() != Eigen::Success) throw NumericalError("eigensolver did not converge");
    for (Eigen::Index i = 0; i < n; ++i) out.push_back(solver.eigenvalues()(i));
    return out;
  }
  // Shift-invert: eigenvalues mu of (B - sA)^{-1} A give z = s + 1/mu;
  // mu = 0 corresponds to an infinite eigenvalue.
  for (Complex s : kShifts) {
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted(pencil, s));
    if (!(safe_rcond(lu) > 1e-10)) continue;
    const Eigen::MatrixXcd m = lu.solve(pencil.a());
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, false);
    if (solver.info() != Eigen::Success) continue;
    const double cutoff = 1e-9 * std::max(1.0, m.norm());
    for (Eigen::Index i = 0; i < n; ++i) {
      const Complex mu = solver.eigenvalues()(i);
      if (std::abs(mu) > cutoff) out.push_back(s + 1.0 / mu);
    }
    return out;
  }
  throw NumericalError("pencil singular: no usable shift for the direct eigensolve");
}

std::vector<double> default_finsler_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 100; ++k) grid.push_back(std::pow(10.0, -3.0 + 6.0 * k / 100.0));
  for (int k = 0; k <= 100; ++k) grid.push_back(-grid[static_cast<std::size_t>(k)]);
  return grid;
}

std::optional<FinslerCertificate> finsler_search(const Eigen::MatrixXd& a_matrix,
                                                 const Eigen::MatrixXd& b_matrix, double xi,
                                                 const std::vector<double>& z_grid) {
  if (a_matrix.rows() != a_matrix.cols() || b_matrix.rows() != b_matrix.cols() ||
      a_matrix.rows() != b_matrix.rows()) {
    throw DimensionError("finsler_search needs square matrices of equal size");
  }
  const Eigen::MatrixXd sym_a = 0.5 * (a_matrix + a_matrix.transpose());
  const Eigen::MatrixXd sym_b = 0.5 * (b_matrix + b_matrix.transpose());
  for (double z : z_grid) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym_b - z * sym_a,
                                                          Eigen::EigenvaluesOnly);
    const double lambda_max = solver.eigenvalues().maxCoeff();
    if (lambda_max < xi) return FinslerCertificate{z, xi, lambda_max};
  }
  return std::nullopt;
}

DavisKahanReport davis_kahan_check(const Eigen::MatrixXd& m0, const Eigen::MatrixXd& m1,
                                   Eigen::Index index) {
  if (m0.rows() != m0.cols() || m1.rows() != m1.cols() || m0.rows() != m1.rows()) {
    throw DimensionError("davis_kahan_check needs square matrices of equal size");
  }
  if (index < 0 || index >= m0.rows()) throw DimensionError("eigenvector index out of range");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s0(0.5 * (m0 + m0.transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s1(0.5 * (m1 + m1.transpose()));
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < m0.rows(); ++j) {
    if (j == index) continue;
    gap = std::min(gap, std::abs(s1.eigenvalues()(index) - s0.eigenvalues()(j)));
  }
  if (!(gap > 0.0)) throw DomainError("Davis-Kahan gap is zero");
  const double overlap = std::abs(s0.eigenvectors().col(index).dot(s1.eigenvectors().col(index)));
  const double sin_angle = std::sqrt(std::max(0.0, 1.0 - overlap * overlap));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diff(m0 - m1, Eigen::EigenvaluesOnly);
  const double norm = diff.eigenvalues().cwiseAbs().maxCoeff();
  const double bound = std::isinf(gap) ? 0.0 : 2.0 * norm / gap;
  return {sin_angle, bound, gap, norm, sin_angle <= bound + 1e-12};
}

double contour_radius_hook(double rho, double p, double scale, double offset) {
  if (!(p > 0.0) || p > 1.0) throw DomainError("contour_radius_hook requires p in (0, 1]");
  if (!(rho >= 0.0)) throw DomainError("contour_radius_hook requires rho >= 0");
  return scale * rho / p + offset;
}

MatrixPencil random_pencil(int n, std::uint64_t seed) {
  if (n < 1) throw DimensionError("pencil size must be at least 1");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd b(n, n);
  Eigen::MatrixXcd a(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) b(i, j) = normal(rng);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) a(i, j) = normal(rng);
  }
  return MatrixPencil(std::move(b), std::move(a));
}

}  // namespace sopbound::pencil
