#ifndef OCCA_SCF_HPP_
#define OCCA_SCF_HPP_

// Trace-fractional subproblem
//
//     maximize  eta(G) = tr(G^T D)^2 / tr(G^T A G)   over G in O^{n x k}
//
// and its self-consistent-field solver. The SCF step replaces G by the
// k-smallest eigenbasis of E(G) = A - xi(G) (D G^T + G D^T), with
// xi(G) = tr(G^T A G) / tr(G^T D), followed by a polar alignment against D.
// Each step is monotone in eta provided the eigenbasis is exact or at least
// does not increase tr(G^T E G).

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "occa/linalg.hpp"

namespace occa {

/// Symmetric positive definite matrix, validated once and shared cheaply.
class SpdMatrix {
 public:
  /// Symmetric within 1e-10 and lambda_min > 1e-12 * ||A||_max, else ContractViolation.
  explicit SpdMatrix(Matrix a);
  /// diag(values); every value must be positive.
  static SpdMatrix diagonal(const Vector& values);

  const Matrix& matrix() const noexcept { return *a_; }
  Eigen::Index size() const noexcept { return a_->rows(); }
  double l1() const noexcept { return l1_; }
  double max_norm() const noexcept { return max_; }

 private:
  struct Trusted {};
  SpdMatrix(Matrix a, Trusted);

  std::shared_ptr<const Matrix> a_;
  double l1_ = 0.0;
  double max_ = 0.0;
};

/// The pair (A, D) defining eta.
class SubproblemSpec {
 public:
  SubproblemSpec(SpdMatrix a, Matrix d);
  SubproblemSpec(Matrix a, Matrix d) : SubproblemSpec(SpdMatrix(std::move(a)), std::move(d)) {}

  const Matrix& a() const noexcept { return a_.matrix(); }
  const SpdMatrix& spd() const noexcept { return a_; }
  const Matrix& d() const noexcept { return d_; }
  Eigen::Index n() const noexcept { return d_.rows(); }
  Eigen::Index k() const noexcept { return d_.cols(); }
  double d_l1() const noexcept { return d_l1_; }

 private:
  SpdMatrix a_;
  Matrix d_;
  double d_l1_ = 0.0;
};

/// phi_A = tr(G^T A G), phi_D = tr(G^T D) and xi = phi_A / phi_D.
struct TraceTerms {
  double phi_a = 0.0;
  double phi_d = 0.0;
  double xi() const { return phi_a / phi_d; }
};

TraceTerms trace_terms(const StiefelPoint& g, const SubproblemSpec& spec);

/// tr(G^T D)^2 / tr(G^T A G).
double eta(const StiefelPoint& g, const SubproblemSpec& spec);

/// M(G) = sym(G^T A G - xi G^T D). Throws UndefinedRatio when phi_D = 0.
Matrix m_matrix(const StiefelPoint& g, const SubproblemSpec& spec);

/// Riemannian gradient -(2/xi^2) (A G - xi D - G M(G)). Throws UndefinedRatio
/// when phi_D = 0.
Matrix grad_eta(const StiefelPoint& g, const SubproblemSpec& spec);

/// E(G) = A - xi (D G^T + G D^T), exactly symmetric. Throws UndefinedRatio
/// when phi_D = 0.
Matrix build_e(const StiefelPoint& g, const SubproblemSpec& spec);

/// max(||A G - xi D - G M||_max, ||G^T D - D^T G||_max).
double kkt_residual(const StiefelPoint& g, const SubproblemSpec& spec);

/// ||grad eta||_1 / (xi^2 (||A||_1 + ||D||_1)) with entrywise 1-norms, capped
/// at 1e300. This is the gradient test of the SCF stopping rule.
double scaled_gradient_norm(const StiefelPoint& g, const SubproblemSpec& spec);

struct ScfConfig {
  double eps_scf = 1e-5;
  int max_iter = 30;
  EigenOptions eigen{};
};

enum class TerminationReason { kGradTol, kRelChangeTol, kMaxIter };

std::string to_string(TerminationReason reason);

struct ScfReport {
  StiefelPoint solution;
  /// eta at the aligned start, then after every iteration.
  std::vector<double> eta_trace;
  /// scaled_gradient_norm, aligned with eta_trace.
  std::vector<double> grad_norms;
  /// zeta_{nu-1} = lambda_{k+1} - lambda_k of E(G_{nu-1}), one per iteration.
  std::vector<double> gaps;
  /// lambda_min(sym(D^T G)), aligned with eta_trace.
  std::vector<double> psd_margins;
  int iterations = 0;
  TerminationReason termination_reason = TerminationReason::kMaxIter;
  /// Iterates where tr(G^T D) vanished after alignment and G was perturbed.
  int zero_ratio_events = 0;
  /// Inner eigensolves that fell back from the iterative to the dense path.
  int dense_fallbacks = 0;
};

/// SCF iteration for eta from `g0` (aligned against D first). Stops after
/// max_iter iterations, when scaled_gradient_norm <= eps_scf or when
/// |eta_nu - eta_{nu-1}| <= eps_scf^{3/2} |eta_nu|.
ScfReport scf_solve(const SubproblemSpec& spec, const StiefelPoint& g0, const ScfConfig& cfg = {});

/// Same, starting from the first k columns of I_n.
ScfReport scf_solve(const SubproblemSpec& spec, const ScfConfig& cfg = {});

struct SecondOrderReport {
  bool passed = false;
  /// min over samples of (rhs - lhs) / (||H||_F^2 (eta (||A||_F + ||M||_F) + ||D||_F^2)).
  double worst_margin = 0.0;
  int samples = 0;
};

/// Samples tangent vectors H at G and tests
///   tr(D^T H)^2 <= eta(G) (tr(H^T A H) - tr(H M(G) H^T)).
/// G must be approximately stationary (scaled KKT residual <= 1e-4);
/// otherwise ContractViolation. Passes when every scaled margin is >= -1e-8.
SecondOrderReport second_order_check(const StiefelPoint& g, const SubproblemSpec& spec, int samples,
                                     std::uint64_t seed);

}  // namespace occa

#endif  // OCCA_SCF_HPP_
