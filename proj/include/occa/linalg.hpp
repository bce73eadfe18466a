#ifndef OCCA_LINALG_HPP_
#define OCCA_LINALG_HPP_

// Dense primitives and Stiefel-manifold utilities shared by every solver.

#include <cstdint>
#include <utility>

#include <Eigen/Dense>

namespace occa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest absolute entry, ||M||_max. Zero for an empty matrix.
double max_abs(const Matrix& m);

/// Entrywise 1-norm, sum of |m_ij|.
double entrywise_l1(const Matrix& m);

/// (M + M^T) / 2.
Matrix sym(const Matrix& m);

/// ||M^T M - I||_max.
double orthonormality_error(const Matrix& m);

/// Flips columns of `u` so the first entry with |u_ij| > 0 in each column is
/// nonnegative. When `v` is given, the same columns of `v` are flipped too,
/// which keeps U * S * V^T unchanged.
void apply_sign_convention(Matrix& u, Matrix* v = nullptr);

/// n x k matrix with orthonormal columns.
class StiefelPoint {
 public:
  static constexpr double kTolerance = 1e-10;

  /// Takes `m` as is; throws ContractViolation if n < k or the columns are
  /// not orthonormal within kTolerance.
  explicit StiefelPoint(Matrix m);

  /// Thin QR of `m` with the diagonal of R made positive. Throws
  /// RankDeficiency when sigma_k(m) <= 1e-12 * sigma_1(m).
  static StiefelPoint orthonormalize(const Matrix& m);

  /// Returns `m` unchanged if it is orthonormal within kTolerance, otherwise
  /// re-orthonormalizes it by thin QR. Used after products like G * Q that
  /// are orthonormal in exact arithmetic.
  static StiefelPoint repair(Matrix m);

  /// First k columns of I_n.
  static StiefelPoint leading_identity(Eigen::Index n, Eigen::Index k);

  const Matrix& matrix() const noexcept { return m_; }
  Eigen::Index rows() const noexcept { return m_.rows(); }
  Eigen::Index cols() const noexcept { return m_.cols(); }

 private:
  struct Unchecked {};
  StiefelPoint(Matrix m, Unchecked) : m_(std::move(m)) {}

  Matrix m_;
};

struct EigenResult {
  StiefelPoint basis;  // n x k, columns ordered like `values`
  Vector values;       // k smallest eigenvalues, ascending
  double gap = 0.0;    // lambda_{k+1} - lambda_k, clamped at 0; 0 when k == n
  int iterations = 0;  // 0 for the dense path
  bool converged = true;
};

enum class EigenMethod { kAutomatic, kDense, kIterative };

struct EigenOptions {
  EigenMethod method = EigenMethod::kAutomatic;
  /// kAutomatic uses the dense decomposition up to this order.
  Eigen::Index dense_limit = 500;
  /// Optional n x k starting block for the iterative solver.
  const Matrix* warm_start = nullptr;
  /// Residual target per column, relative to ||E||_max.
  double tolerance = 1e-10;
  int max_iterations = 5000;
  /// Seed for random fill of the iterative solver's guard columns.
  std::uint64_t seed = 0x5eed;
};

/// Orthonormal eigenbasis for the k algebraically smallest eigenvalues of a
/// symmetric E, with the gap lambda_{k+1} - lambda_k.
///
/// Requires 1 <= k < n and E symmetric within 1e-10 absolute
/// (ContractViolation otherwise). The iterative path throws SolverFailure if
/// it does not reach the residual target.
EigenResult k_smallest_eigenbasis(const Matrix& e, Eigen::Index k, const EigenOptions& options = {});

namespace detail {
/// Block LOBPCG for the smallest eigenpairs. Never throws on
/// non-convergence; inspect `converged` instead. The Ritz subspace always
/// contains the warm start, so the sum of the returned k values does not
/// exceed tr(W^T E W) for an orthonormal warm start W.
EigenResult lobpcg_smallest(const Matrix& e, Eigen::Index k, const EigenOptions& options);
}  // namespace detail

/// Polar alignment of G against D: with G^T D = U S V^T returns G U V^T, so
/// that the new G^T D is symmetric PSD with trace sum_j sigma_j(G^T D).
/// G^T D = 0 returns G unchanged.
StiefelPoint align(const StiefelPoint& g, const Matrix& d);

/// Rotates X and Y within their column spaces so that X^T C Y becomes
/// symmetric PSD: with X^T C Y = U S V^T returns (X U, Y V).
std::pair<StiefelPoint, StiefelPoint> pair_align(const StiefelPoint& x, const StiefelPoint& y,
                                                 const Matrix& c);

/// Canonical-angle distance sum_j sin(theta_j) between span(G1) and span(G2).
/// The sines are taken as singular values of (I - G1 G1^T) G2, which stays
/// accurate for nearly equal subspaces. Value in [0, k].
double dist_tr(const StiefelPoint& g1, const StiefelPoint& g2);

/// H = G K + (I - G G^T) J for skew-symmetric K.
Matrix tangent_vector(const StiefelPoint& g, const Matrix& skew_k, const Matrix& j);

/// Random tangent vector at G with K = (R - R^T)/2 and J Gaussian, both drawn
/// from a std::mt19937_64 seeded with `seed`.
Matrix sample_tangent(const StiefelPoint& g, std::uint64_t seed);

}  // namespace occa

#endif  // OCCA_LINALG_HPP_
