#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace sopbound::pencil {

using Complex = std::complex<double>;

/// Descriptor pair (B, A) with characteristic polynomial det(B - zA).
/// Construction checks that both matrices are square with equal size and
/// that the pencil is regular at three probe points.
class MatrixPencil {
 public:
  MatrixPencil(Eigen::MatrixXcd b_matrix, Eigen::MatrixXcd a_matrix);

  const Eigen::MatrixXcd& b() const { return b_; }
  const Eigen::MatrixXcd& a() const { return a_; }
  Eigen::Index dim() const { return b_.rows(); }

 private:
  Eigen::MatrixXcd b_;
  Eigen::MatrixXcd a_;
};

struct Circle {
  Complex center{0.0, 0.0};
  double radius = 1.0;
};

/// Annulus with a wedge removed. The boundary runs anticlockwise along the
/// outer arc, inward along one slit edge, clockwise along the inner arc and
/// back out along the other edge. The default slit sits on the negative
/// real axis.
struct Keyhole {
  Complex center{0.0, 0.0};
  double outer_radius = 1.0;
  double inner_radius = 1e-3;
  double slit_angle = 3.14159265358979323846;
  double slit_half_width = 1e-3;  // radians
};

struct Contour {
  std::variant<Circle, Keyhole> shape;
  int nodes = 128;

  static Contour circle(Complex center, double radius, int nodes = 128);
  static Contour keyhole(const Keyhole& k, int nodes = 128);
};

/// One quadrature node: position z and weight w such that the contour
/// integral of g is approximately sum w * g(z).
struct QuadratureNode {
  Complex z;
  Complex w;
};

std::vector<QuadratureNode> quadrature(const Contour& contour);

/// Whether the open region bounded by the contour contains z.
bool encloses(const Contour& contour, Complex z);

struct EigCountResult {
  Complex raw_integral;  // the contour integral before division by 2 pi i
  int count;
  double residual;  // |raw/(2 pi i) - count|
  int nodes_used;
};

struct CountOptions {
  // Doubling the node count stops once the residual, and the change from the
  // previous node count, both drop below this.
  double target_residual = 1e-3;
  // Aliasing from an eigenvalue close to the contour can sit near an integer
  // at one node count; requiring two counts to agree rules that out. Off
  // gives a single evaluation at contour.nodes.
  bool require_agreement = true;
  int max_nodes = 8192;
  double accept_residual = 0.25;
  // Reciprocal condition number below which a node solve is rejected.
  double min_rcond = 1e-13;
};

Complex char_poly_eval(const MatrixPencil& pencil, Complex z);

/// (1 / 2 pi i) times the contour integral of Tr[(B - zA)^{-1}(-A)]. The node
/// count starts at contour.nodes and doubles until the value is near an
/// integer and agrees with the previous node count. Throws UnreliableCount
/// when that does not happen within max_nodes.
EigCountResult count_eigs_contour(const MatrixPencil& pencil, const Contour& contour,
                                  const CountOptions& options = {});

/// Trace integrand Tr[(B - zA)^{-1}(-A)] at a single point.
Complex log_derivative(const MatrixPencil& pencil, Complex z);

/// All finite generalized eigenvalues of (B, A), by a direct dense solve.
/// Used as the reference for the contour count.
std::vector<Complex> direct_eig_oracle(const MatrixPencil& pencil);

struct FinslerCertificate {
  double z_value;
  double threshold;
  double lambda_max;
};

/// 101 log-spaced points in [1e-3, 1e3] followed by their negatives.
std::vector<double> default_finsler_grid();

/// First grid z with lambda_max(sym(B - zA)) < xi.
std::optional<FinslerCertificate> finsler_search(const Eigen::MatrixXd& a_matrix,
                                                 const Eigen::MatrixXd& b_matrix, double xi,
                                                 const std::vector<double>& z_grid);

struct DavisKahanReport {
  double sin_angle;
  double bound;
  double gap;
  double perturbation_norm;
  bool holds;
};

/// sin of the angle between the i-th eigenvectors (ascending order) of two
/// symmetric matrices against 2 ||m0 - m1|| / gamma.
DavisKahanReport davis_kahan_check(const Eigen::MatrixXd& m0, const Eigen::MatrixXd& m1,
                                   Eigen::Index index);

/// Contour radius as a function of (rho, Pr(L >= 0)): radius = scale * rho
/// / p + offset. A declared choice; the dependence is otherwise unspecified.
double contour_radius_hook(double rho, double p, double scale = 1.0, double offset = 1.0);

/// Real Gaussian pencil of size n, deterministic in the seed.
MatrixPencil random_pencil(int n, std::uint64_t seed);

}  // namespace sopbound::pencil
