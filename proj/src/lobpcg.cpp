// Block LOBPCG for the k smallest eigenpairs of a dense symmetric matrix.
//
// The search space [X, R, P] is kept orthonormal explicitly (Householder QR
// after projecting out X, dropping numerically dependent directions), which is
// slower than the classical Gram-free recurrences but does not break down when
// residuals become tiny.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "occa/errors.hpp"
#include "occa/linalg.hpp"

namespace occa::detail {

namespace {

// Orthonormalizes the columns of `block` against the orthonormal `basis` and
// among themselves; columns whose remaining norm falls below `drop_tol` times
// their original norm are discarded.
Matrix orthonormal_complement(const Matrix& basis, const Matrix& block, double drop_tol) {
  if (block.cols() == 0) return Matrix(basis.rows(), 0);
  Matrix w = block;
  for (int pass = 0; pass < 2; ++pass) w -= basis * (basis.transpose() * w);

  const Vector norms = block.colwise().norm();
  Eigen::ColPivHouseholderQR<Matrix> qr(w);
  const Matrix& r = qr.matrixQR();
  const double scale = std::max(norms.maxCoeff(), 1e-300);
  Eigen::Index rank = 0;
  const Eigen::Index diag = std::min(w.rows(), w.cols());
  while (rank < diag && std::abs(r(rank, rank)) > drop_tol * scale) ++rank;
  if (rank == 0) return Matrix(basis.rows(), 0);

  Matrix q = qr.householderQ() * Matrix::Identity(w.rows(), rank);
  // One reorthogonalization sweep against the basis keeps [basis, q] orthonormal to eps.
  q -= basis * (basis.transpose() * q);
  Eigen::HouseholderQR<Matrix> refine(q);
  return refine.householderQ() * Matrix::Identity(q.rows(), rank);
}

}  // namespace

EigenResult lobpcg_smallest(const Matrix& e, Eigen::Index k, const EigenOptions& options) {
  const Eigen::Index n = e.rows();
  // k + 1 columns are needed for the gap; extra guard columns speed convergence.
  const Eigen::Index wanted = std::min(k + 1, n);
  const Eigen::Index block = std::min(n, wanted + std::max<Eigen::Index>(2, k / 2));
  const double scale = std::max(max_abs(e), 1e-300);
  const double target = options.tolerance * scale;

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix start(n, block);
  Eigen::Index filled = 0;
  if (options.warm_start != nullptr) {
    if (options.warm_start->rows() != n || options.warm_start->cols() > block) {
      throw ContractViolation("lobpcg: warm start has the wrong shape");
    }
    filled = options.warm_start->cols();
    start.leftCols(filled) = *options.warm_start;
  }
  for (Eigen::Index c = filled; c < block; ++c)
    for (Eigen::Index i = 0; i < n; ++i) start(i, c) = normal(rng);

  // First Rayleigh-Ritz on span(start). Warm start columns go first so they
  // are never dropped as dependent.
  Matrix x = orthonormal_complement(Matrix(n, 0), start, 1e-12);
  if (x.cols() < block) {
    Matrix extra(n, block - x.cols());
    for (Eigen::Index c = 0; c < extra.cols(); ++c)
      for (Eigen::Index i = 0; i < n; ++i) extra(i, c) = normal(rng);
    Matrix more = orthonormal_complement(x, extra, 1e-12);
    Matrix joined(n, x.cols() + more.cols());
    joined << x, more;
    x = std::move(joined);
  }

  Matrix ex = e * x;
  Vector theta;
  {
    Eigen::SelfAdjointEigenSolver<Matrix> rr(sym(x.transpose() * ex));
    theta = rr.eigenvalues().head(block);
    const Matrix c = rr.eigenvectors().leftCols(block);
    x = x * c;
    ex = ex * c;
  }
  Matrix p(n, 0);

  int it = 0;
  bool converged = false;
  for (; it < options.max_iterations; ++it) {
    const Matrix r = ex - x * theta.asDiagonal();
    const Vector res = r.colwise().norm();
    if (res.head(wanted).maxCoeff() <= target) {
      converged = true;
      break;
    }
    // Only unconverged residual directions enter the search space.
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < block; ++j)
      if (res(j) > target) active.push_back(j);
    Matrix w(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) w.col(static_cast<Eigen::Index>(a)) = r.col(active[a]);

    Matrix cand(n, w.cols() + p.cols());
    cand << w, p;
    const Matrix q = orthonormal_complement(x, cand, 1e-10);
    const Matrix eq = e * q;

    const Eigen::Index s = block + q.cols();
    Matrix basis(n, s);
    basis << x, q;
    Matrix ebasis(n, s);
    ebasis << ex, eq;
    Eigen::SelfAdjointEigenSolver<Matrix> rr(sym(basis.transpose() * ebasis));
    theta = rr.eigenvalues().head(block);
    const Matrix c = rr.eigenvectors().leftCols(block);

    p = q * c.bottomRows(q.cols());
    x = basis * c;
    ex = ebasis * c;
    if (it % 16 == 15) {
      // Refresh E X to keep rounding from accumulating in the recurrence.
      Eigen::HouseholderQR<Matrix> qr(x);
      x = qr.householderQ() * Matrix::Identity(n, block);
      ex = e * x;
      Eigen::SelfAdjointEigenSolver<Matrix> rr2(sym(x.transpose() * ex));
      theta = rr2.eigenvalues();
      x = x * rr2.eigenvectors();
      ex = ex * rr2.eigenvectors();
    }
  }

  const double gap = wanted > k ? std::max(0.0, theta(k) - theta(k - 1)) : 0.0;
  return EigenResult{StiefelPoint::repair(x.leftCols(k)), theta.head(k), gap, it, converged};
}

}  // namespace occa::detail
