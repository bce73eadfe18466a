#ifndef OCCA_OMCCA_HPP_
#define OCCA_OMCCA_HPP_

// Range-constrained orthogonal multiset CCA.
//
// Each centered view S_i = U_i Sigma_i V_i^T is reduced to its numerical
// range, so that X_i = U_i Xhat_i with Xhat_i in O^{r_i x k}. The objective
//
//   g = sum_{i != j} rho_ij tr(Xhat_i^T Sigma_i V_i^T V_j Sigma_j Xhat_j)
//                    / (sqrt(tr(Xhat_i^T Sigma_i^2 Xhat_i)) sqrt(tr(Xhat_j^T Sigma_j^2 Xhat_j)))
//
// is maximized one view at a time; the update for view s is the trace-ratio
// subproblem with A = Sigma_s^2 and D = D_s, solved by scf_solve. A Jacobi
// cycle builds every D_s from the previous cycle's iterates (and may solve the
// subproblems concurrently); a Gauss-Seidel cycle uses the freshest iterates
// and is monotone in g.

#include <vector>

#include "occa/linalg.hpp"
#include "occa/scf.hpp"
#include "occa/weighting.hpp"

namespace occa {

struct RangeReducedView {
  Matrix u;      // n_i x r_i
  Vector sigma;  // r_i, positive, nonincreasing
  Matrix v;      // q x r_i
  Eigen::Index r = 0;
};

/// Thin SVD of each view truncated at singular values > rank_tol * sigma_1,
/// with the sign convention applied to U. rank_tol <= 0 uses
/// max(n_i, q) * machine epsilon per view. Throws DegenerateView for a zero
/// view, ContractViolation when the views do not share q.
std::vector<RangeReducedView> reduce_views(const std::vector<Matrix>& views, double rank_tol = 0.0);

/// D_s = Sigma_s V_s^T sum_{j != s} rho_sj V_j Sigma_j Xhat_j / sqrt(tr(Xhat_j^T Sigma_j^2 Xhat_j)).
/// Pairs with rho_sj = 0 are skipped; `terms`, when given, is incremented
/// once per evaluated pair. Throws IsolatedView when every rho_sj is zero.
Matrix compute_ds(Eigen::Index s, const std::vector<StiefelPoint>& xhat, const WeightMatrix& weights,
                  const std::vector<RangeReducedView>& reduced, int* terms = nullptr);

/// The multiset objective in reduced coordinates.
double g_objective(const std::vector<StiefelPoint>& xhat, const WeightMatrix& weights,
                   const std::vector<RangeReducedView>& reduced);

/// The multiset objective on the original data,
/// sum_{i != j} rho_ij tr(X_i^T S_i S_j^T X_j) / sqrt(tr(X_i^T S_i S_i^T X_i) tr(X_j^T S_j S_j^T X_j)).
/// Throws DegenerateView when a denominator vanishes.
double total_correlation(const std::vector<Matrix>& projections, const std::vector<Matrix>& views,
                         const WeightMatrix& weights);

enum class CycleScheme { kJacobi, kGaussSeidel };

struct OmccaConfig {
  double eps_outer = 1e-6;
  int max_cycles = 100;
  CycleScheme scheme = CycleScheme::kGaussSeidel;
  ScfConfig scf{};
  /// Worker threads for Jacobi cycles; results do not depend on it.
  int threads = 1;
  double rank_tol = 0.0;
};

struct OmccaReport {
  /// X_i = U_i Xhat_i, n_i x k.
  std::vector<StiefelPoint> projections;
  /// Xhat_i, r_i x k.
  std::vector<StiefelPoint> reduced;
  std::vector<Eigen::Index> ranks;
  /// g after every cycle.
  std::vector<double> g_trace;
  /// Sum over views of the subproblem optimum sqrt(eta_s) per cycle; drives
  /// the stopping test |g - g0| <= eps g.
  std::vector<double> cycle_sums;
  std::vector<std::vector<int>> per_cycle_subproblem_iters;
  /// Largest final scaled gradient norm among the cycle's subproblem solves.
  std::vector<double> grad_norms;
  /// Smallest eigengap met by the cycle's subproblem solves, NaN if none iterated.
  std::vector<double> gaps;
  /// Pairwise D_s terms evaluated per cycle.
  std::vector<int> terms_per_cycle;
  int cycles = 0;
  /// Gauss-Seidel updates rejected because eta fell below the warm start.
  int rejected_updates = 0;
  TerminationReason termination_reason = TerminationReason::kMaxIter;
};

/// Range-constrained OMCCA on centered views with every Xhat_i started at the
/// leading k columns of I_{r_i}. Needs at least two views and
/// 1 <= k <= min(r_i, q); throws RankDeficiency naming the view otherwise.
OmccaReport rcomcca(const std::vector<Matrix>& views, Eigen::Index k, const WeightMatrix& weights,
                    const OmccaConfig& cfg = {});

/// Same on views that are already reduced.
OmccaReport rcomcca(const std::vector<RangeReducedView>& reduced, Eigen::Index k, const WeightMatrix& weights,
                    const OmccaConfig& cfg = {});

}  // namespace occa

#endif  // OCCA_OMCCA_HPP_
