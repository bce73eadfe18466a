#include "occa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "occa/errors.hpp"

namespace occa {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double entrywise_l1(const Matrix& m) { return m.cwiseAbs().sum(); }

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double orthonormality_error(const Matrix& m) {
  const Matrix gram = m.transpose() * m;
  return max_abs(gram - Matrix::Identity(m.cols(), m.cols()));
}

void apply_sign_convention(Matrix& u, Matrix* v) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      if (u(i, j) == 0.0) continue;
      if (u(i, j) < 0.0) {
        u.col(j) *= -1.0;
        if (v != nullptr) v->col(j) *= -1.0;
      }
      break;
    }
  }
}

// StiefelPoint ---------------------------------------------------------------

StiefelPoint::StiefelPoint(Matrix m) : m_(std::move(m)) {
  if (m_.rows() < m_.cols() || m_.cols() < 1) {
    throw ContractViolation("StiefelPoint: need n >= k >= 1, got " + std::to_string(m_.rows()) +
                            "x" + std::to_string(m_.cols()));
  }
  const double err = orthonormality_error(m_);
  if (!(err <= kTolerance)) {
    throw ContractViolation("StiefelPoint: columns not orthonormal, ||G^T G - I||_max = " +
                            std::to_string(err));
  }
}

StiefelPoint StiefelPoint::orthonormalize(const Matrix& m) {
  const Eigen::Index n = m.rows();
  const Eigen::Index k = m.cols();
  if (n < k || k < 1) throw ContractViolation("orthonormalize: need n >= k >= 1");
  if (!m.allFinite()) throw ContractViolation("orthonormalize: non-finite entries");
  const Vector sv = Eigen::JacobiSVD<Matrix>(m).singularValues();
  if (!(sv(k - 1) > 1e-12 * sv(0))) {
    throw RankDeficiency("orthonormalize: numerical rank below " + std::to_string(k));
  }
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(n, k);
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return StiefelPoint(std::move(q), Unchecked{});
}

StiefelPoint StiefelPoint::repair(Matrix m) {
  if (m.rows() >= m.cols() && m.cols() >= 1 && orthonormality_error(m) <= kTolerance) {
    return StiefelPoint(std::move(m), Unchecked{});
  }
  return orthonormalize(m);
}

StiefelPoint StiefelPoint::leading_identity(Eigen::Index n, Eigen::Index k) {
  if (n < k || k < 1) throw ContractViolation("leading_identity: need n >= k >= 1");
  return StiefelPoint(Matrix::Identity(n, k), Unchecked{});
}

// Eigensolver ------------------------------------------------------------------

namespace {

void check_symmetric(const Matrix& e, Eigen::Index k) {
  if (e.rows() != e.cols()) throw ContractViolation("k_smallest_eigenbasis: E is not square");
  if (k < 1 || k >= e.rows()) {
    throw ContractViolation("k_smallest_eigenbasis: need 1 <= k < n, got k=" + std::to_string(k) +
                            " n=" + std::to_string(e.rows()));
  }
  if (!e.allFinite()) throw ContractViolation("k_smallest_eigenbasis: non-finite entries");
  const double asym = max_abs(e - e.transpose());
  if (asym > 1e-10) {
    throw ContractViolation("k_smallest_eigenbasis: E not symmetric (||E - E^T||_max = " +
                            std::to_string(asym) + ")");
  }
}

EigenResult dense_smallest(const Matrix& e, Eigen::Index k) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(e);
  if (es.info() != Eigen::Success) throw SolverFailure("dense symmetric eigensolver failed", 0);
  const Vector& w = es.eigenvalues();
  Matrix basis = es.eigenvectors().leftCols(k);
  return EigenResult{StiefelPoint::repair(std::move(basis)), w.head(k),
                     std::max(0.0, w(k) - w(k - 1)), 0, true};
}

}  // namespace

EigenResult k_smallest_eigenbasis(const Matrix& e, Eigen::Index k, const EigenOptions& options) {
  check_symmetric(e, k);
  const bool dense = options.method == EigenMethod::kDense ||
                     (options.method == EigenMethod::kAutomatic && e.rows() <= options.dense_limit);
  if (dense) return dense_smallest(e, k);
  EigenResult r = detail::lobpcg_smallest(e, k, options);
  if (!r.converged) throw SolverFailure("LOBPCG did not reach the residual target", r.iterations);
  return r;
}

// Alignment and subspace metrics ----------------------------------------------

StiefelPoint align(const StiefelPoint& g, const Matrix& d) {
  if (d.rows() != g.rows() || d.cols() != g.cols()) {
    throw ContractViolation("align: D must have the shape of G");
  }
  const Matrix w = g.matrix().transpose() * d;
  if (max_abs(w) == 0.0) return g;
  Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix q = svd.matrixU() * svd.matrixV().transpose();
  return StiefelPoint::repair(g.matrix() * q);
}

std::pair<StiefelPoint, StiefelPoint> pair_align(const StiefelPoint& x, const StiefelPoint& y,
                                                 const Matrix& c) {
  if (c.rows() != x.rows() || c.cols() != y.rows() || x.cols() != y.cols()) {
    throw ContractViolation("pair_align: X^T C Y must be k x k");
  }
  const Matrix w = x.matrix().transpose() * c * y.matrix();
  if (max_abs(w) == 0.0) return {x, y};
  Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix u = svd.matrixU();
  Matrix v = svd.matrixV();
  apply_sign_convention(u, &v);
  return {StiefelPoint::repair(x.matrix() * u), StiefelPoint::repair(y.matrix() * v)};
}

double dist_tr(const StiefelPoint& g1, const StiefelPoint& g2) {
  if (g1.rows() != g2.rows() || g1.cols() != g2.cols()) {
    throw ContractViolation("dist_tr: subspaces must share n and k");
  }
  const Matrix& a = g1.matrix();
  const Matrix& b = g2.matrix();
  const Matrix residual = b - a * (a.transpose() * b);
  const Vector sines = Eigen::JacobiSVD<Matrix>(residual).singularValues();
  double total = 0.0;
  for (Eigen::Index j = 0; j < g1.cols(); ++j) total += std::clamp(sines(j), 0.0, 1.0);
  return total;
}

Matrix tangent_vector(const StiefelPoint& g, const Matrix& skew_k, const Matrix& j) {
  const Matrix& gm = g.matrix();
  return gm * skew_k + j - gm * (gm.transpose() * j);
}

Matrix sample_tangent(const StiefelPoint& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index n = g.rows();
  const Eigen::Index k = g.cols();
  Matrix r(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index c = 0; c < k; ++c) r(i, c) = normal(rng);
  Matrix j(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < k; ++c) j(i, c) = normal(rng);
  const Matrix skew = 0.5 * (r - r.transpose());
  return tangent_vector(g, skew, j);
}

}  // namespace occa
