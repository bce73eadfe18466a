#ifndef OCCA_TWO_VIEW_HPP_
#define OCCA_TWO_VIEW_HPP_

// Two-view orthogonal CCA:
//
//     maximize  F(X, Y) = tr(X^T C Y)^2 / (tr(X^T A X) tr(Y^T B Y))
//
// over X in O^{n x k}, Y in O^{m x k}, with A = S1 S1^T, B = S2 S2^T and
// C = S1 S2^T built from centered views. Solved by alternating between the X
// and Y trace-ratio subproblems, each handled by scf_solve.

#include <vector>

#include "occa/linalg.hpp"
#include "occa/scf.hpp"

namespace occa {

struct TwoViewProblem {
  Matrix a;  // n x n
  Matrix b;  // m x m
  Matrix c;  // n x m
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::Index q = 0;
};

/// A = S1 S1^T, B = S2 S2^T, C = S1 S2^T. Both views must be centered (row
/// means within 1e-10 * ||S||_max) and share q; ContractViolation otherwise.
TwoViewProblem build_two_view(const Matrix& s1, const Matrix& s2);

/// Problem from precomputed second moments (e.g. range-reduced coordinates).
TwoViewProblem two_view_from_moments(Matrix a, Matrix b, Matrix c, Eigen::Index q);

/// tr(X^T C Y)^2 / (tr(X^T A X) tr(Y^T B Y)). X and Y need not be orthonormal.
/// Throws DegenerateView when either denominator is zero.
double objective_F(const Matrix& x, const Matrix& y, const TwoViewProblem& prob);

/// tr(X^T C Y) / sqrt(tr(X^T A X) tr(Y^T B Y)).
double objective_f(const Matrix& x, const Matrix& y, const TwoViewProblem& prob);

/// Euclidean norm of the stacked Riemannian gradient (grad_X F, grad_Y F).
double grad_F_norm(const StiefelPoint& x, const StiefelPoint& y, const TwoViewProblem& prob);

struct AltConfig {
  double eps_alt = 1e-8;
  int max_outer = 30;
};

struct OccaReport {
  StiefelPoint x;
  StiefelPoint y;
  /// F at the start, then after every outer step.
  std::vector<double> F_trace;
  std::vector<double> grad_norms;
  /// lambda_min(sym(X^T C Y)) after every outer step.
  std::vector<double> psd_margins;
  /// ||X^T C Y - (X^T C Y)^T||_max after every outer step.
  std::vector<double> asymmetry;
  /// Total SCF iterations spent in the X and Y subproblems.
  std::vector<int> inner_iterations;
  /// Smallest eigengap met by the SCF solves of each outer step, NaN when
  /// neither subproblem needed an iteration.
  std::vector<double> gaps;
  double f_final = 0.0;
  double grad_norm_final = 0.0;
  int outer_iterations = 0;
  TerminationReason termination_reason = TerminationReason::kMaxIter;
};

/// Alternating solver. Each outer step solves the X subproblem with
/// D = C Y / sqrt(tr(Y^T B Y)) warm-started at the current X, then the Y
/// subproblem with D = C^T X / sqrt(tr(X^T A X)), then pair_align. Stops when
/// the step count reaches max_outer, when grad_F_norm <= eps_alt or when the
/// relative change of F is <= eps_alt.
OccaReport occa_alternate(const TwoViewProblem& prob, Eigen::Index k, const StiefelPoint& x0,
                          const StiefelPoint& y0, const AltConfig& alt = {}, const ScfConfig& scf = {});

/// Same, starting from the leading k columns of the identities.
OccaReport occa_alternate(const TwoViewProblem& prob, Eigen::Index k, const AltConfig& alt = {},
                          const ScfConfig& scf = {});

struct CcaResult {
  Matrix x1;  // n x k, X1^T A X1 = I
  Matrix x2;  // m x k, X2^T B X2 = I
  Vector correlations;
};

/// max(rows, q) * machine epsilon.
double default_rank_tol(Eigen::Index rows, Eigen::Index q);

/// Classical CCA by whitening both views with pseudo-inverse square roots on
/// their numerical ranges (eigenvalues > rank_tol * largest) and taking the
/// SVD of the whitened cross-covariance. rank_tol <= 0 picks
/// default_rank_tol per view. Throws RankDeficiency naming the view when k
/// exceeds its numerical rank.
CcaResult classical_cca(const TwoViewProblem& prob, Eigen::Index k, double rank_tol = 0.0);

/// Thin QR with positive diagonal of R. Throws RankDeficiency when
/// sigma_k(X) <= 1e-12 sigma_1(X).
StiefelPoint post_orthogonalize(const Matrix& x);

}  // namespace occa

#endif  // OCCA_TWO_VIEW_HPP_
