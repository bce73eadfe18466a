#include "occa/two_view.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "occa/errors.hpp"

namespace occa {

namespace {

void check_centered(const Matrix& s, int view) {
  const double scale = std::max(max_abs(s), 1.0);
  const double worst = s.rowwise().mean().cwiseAbs().maxCoeff();
  if (worst > 1e-10 * scale) {
    throw ContractViolation("view " + std::to_string(view) + " is not centered (max row mean " +
                            std::to_string(worst) + ")");
  }
}

struct Traces {
  double cross;
  double a;
  double b;
};

Traces traces(const Matrix& x, const Matrix& y, const TwoViewProblem& prob) {
  if (x.rows() != prob.n || y.rows() != prob.m || x.cols() != y.cols()) {
    throw ContractViolation("projection shapes do not match the problem");
  }
  const Traces t{(x.transpose() * prob.c * y).trace(), (x.transpose() * prob.a * x).trace(),
                 (y.transpose() * prob.b * y).trace()};
  if (!(t.a > 0.0)) throw DegenerateView("view 1 has zero variance in the projected subspace", 1);
  if (!(t.b > 0.0)) throw DegenerateView("view 2 has zero variance in the projected subspace", 2);
  return t;
}

Matrix project_tangent(const Matrix& g, const Matrix& z) { return z - g * sym(g.transpose() * z); }

SpdMatrix spd_or_rank_error(const Matrix& a, int view) {
  try {
    return SpdMatrix(a);
  } catch (const ContractViolation&) {
    throw RankDeficiency("view " + std::to_string(view) +
                             " covariance is not positive definite; reduce the view or use omcca",
                         view);
  }
}

}  // namespace

TwoViewProblem build_two_view(const Matrix& s1, const Matrix& s2) {
  if (s1.cols() != s2.cols()) throw ContractViolation("views must have the same number of samples");
  if (s1.size() == 0 || s2.size() == 0) throw ContractViolation("empty view");
  check_centered(s1, 1);
  check_centered(s2, 2);
  return TwoViewProblem{sym(s1 * s1.transpose()), sym(s2 * s2.transpose()), s1 * s2.transpose(), s1.rows(),
                        s2.rows(), s1.cols()};
}

TwoViewProblem two_view_from_moments(Matrix a, Matrix b, Matrix c, Eigen::Index q) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || c.rows() != a.rows() || c.cols() != b.rows()) {
    throw ContractViolation("two_view_from_moments: inconsistent shapes");
  }
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.rows();
  return TwoViewProblem{sym(a), sym(b), std::move(c), n, m, q};
}

double objective_F(const Matrix& x, const Matrix& y, const TwoViewProblem& prob) {
  const Traces t = traces(x, y, prob);
  return t.cross * t.cross / (t.a * t.b);
}

double objective_f(const Matrix& x, const Matrix& y, const TwoViewProblem& prob) {
  const Traces t = traces(x, y, prob);
  return t.cross / std::sqrt(t.a * t.b);
}

double grad_F_norm(const StiefelPoint& x, const StiefelPoint& y, const TwoViewProblem& prob) {
  const Traces t = traces(x.matrix(), y.matrix(), prob);
  const Matrix& xm = x.matrix();
  const Matrix& ym = y.matrix();
  const double lin = 2.0 * t.cross / (t.a * t.b);
  const Matrix dx = lin * (prob.c * ym) - (2.0 * t.cross * t.cross / (t.a * t.a * t.b)) * (prob.a * xm);
  const Matrix dy =
      lin * (prob.c.transpose() * xm) - (2.0 * t.cross * t.cross / (t.a * t.b * t.b)) * (prob.b * ym);
  return std::sqrt(project_tangent(xm, dx).squaredNorm() + project_tangent(ym, dy).squaredNorm());
}

OccaReport occa_alternate(const TwoViewProblem& prob, Eigen::Index k, const StiefelPoint& x0,
                          const StiefelPoint& y0, const AltConfig& alt, const ScfConfig& scf) {
  if (k < 1 || k >= std::min(prob.n, prob.m)) {
    throw ContractViolation("occa_alternate: need 1 <= k < min(n, m)");
  }
  if (x0.rows() != prob.n || y0.rows() != prob.m || x0.cols() != k || y0.cols() != k) {
    throw ContractViolation("occa_alternate: initial guesses have the wrong shape");
  }
  if (!(alt.eps_alt > 0.0) || alt.max_outer < 1) throw ContractViolation("AltConfig: need eps_alt > 0");

  const SpdMatrix a = spd_or_rank_error(prob.a, 1);
  const SpdMatrix b = spd_or_rank_error(prob.b, 2);
  if (max_abs(prob.c) == 0.0) throw DegenerateView("the views are uncorrelated (C = 0)");

  StiefelPoint x = x0;
  StiefelPoint y = y0;
  OccaReport report{x, y, {}, {}, {}, {}, {}, {}, 0.0, 0.0, 0, TerminationReason::kMaxIter};
  report.F_trace.push_back(objective_F(x.matrix(), y.matrix(), prob));
  report.grad_norms.push_back(grad_F_norm(x, y, prob));

  for (int nu = 1; nu <= alt.max_outer; ++nu) {
    int inner = 0;
    double gap = std::numeric_limits<double>::quiet_NaN();
    auto solve = [&](const SpdMatrix& spd, Matrix d, const StiefelPoint& warm, const char* which) {
      try {
        ScfReport r = scf_solve(SubproblemSpec(spd, std::move(d)), warm, scf);
        inner += r.iterations;
        for (double z : r.gaps) gap = std::isnan(gap) ? z : std::min(gap, z);
        return r.solution;
      } catch (const Error& e) {
        throw Error("outer step " + std::to_string(nu) + ", " + which + " subproblem: " + e.what());
      }
    };
    const double tb = (y.matrix().transpose() * prob.b * y.matrix()).trace();
    if (!(tb > 0.0)) throw DegenerateView("view 2 has zero variance in the projected subspace", 2);
    x = solve(a, prob.c * y.matrix() / std::sqrt(tb), x, "X");
    const double ta = (x.matrix().transpose() * prob.a * x.matrix()).trace();
    if (!(ta > 0.0)) throw DegenerateView("view 1 has zero variance in the projected subspace", 1);
    y = solve(b, prob.c.transpose() * x.matrix() / std::sqrt(ta), y, "Y");

    auto aligned = pair_align(x, y, prob.c);
    x = std::move(aligned.first);
    y = std::move(aligned.second);

    const Matrix w = x.matrix().transpose() * prob.c * y.matrix();
    report.psd_margins.push_back(
        Eigen::SelfAdjointEigenSolver<Matrix>(sym(w), Eigen::EigenvaluesOnly).eigenvalues()(0));
    report.asymmetry.push_back(max_abs(w - w.transpose()));
    report.inner_iterations.push_back(inner);
    report.gaps.push_back(gap);
    report.outer_iterations = nu;

    const double previous = report.F_trace.back();
    const double current = objective_F(x.matrix(), y.matrix(), prob);
    report.F_trace.push_back(current);
    report.grad_norms.push_back(grad_F_norm(x, y, prob));

    if (report.grad_norms.back() <= alt.eps_alt) {
      report.termination_reason = TerminationReason::kGradTol;
      break;
    }
    if (std::abs(current - previous) <= alt.eps_alt * std::abs(current)) {
      report.termination_reason = TerminationReason::kRelChangeTol;
      break;
    }
  }
  report.x = x;
  report.y = y;
  report.f_final = objective_f(x.matrix(), y.matrix(), prob);
  report.grad_norm_final = report.grad_norms.back();
  return report;
}

OccaReport occa_alternate(const TwoViewProblem& prob, Eigen::Index k, const AltConfig& alt,
                          const ScfConfig& scf) {
  if (k < 1 || k >= std::min(prob.n, prob.m)) {
    throw ContractViolation("occa_alternate: need 1 <= k < min(n, m)");
  }
  return occa_alternate(prob, k, StiefelPoint::leading_identity(prob.n, k),
                        StiefelPoint::leading_identity(prob.m, k), alt, scf);
}

// Classical CCA baseline ----------------------------------------------------------

double default_rank_tol(Eigen::Index rows, Eigen::Index q) {
  return static_cast<double>(std::max(rows, q)) * std::numeric_limits<double>::epsilon();
}

namespace {

// Q_r diag(lambda_r^{-1/2}) on the numerical range of a PSD matrix.
Matrix inverse_sqrt_on_range(const Matrix& s, double tol, Eigen::Index k, int view) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  const Vector& w = es.eigenvalues();
  const double largest = w.maxCoeff();
  if (!(largest > 0.0)) throw RankDeficiency("view " + std::to_string(view) + " has zero covariance", view);
  Eigen::Index first = 0;
  while (first < w.size() && !(w(first) > tol * largest)) ++first;
  const Eigen::Index rank = w.size() - first;
  if (k > rank) {
    throw RankDeficiency("view " + std::to_string(view) + " has numerical rank " + std::to_string(rank) +
                             " < k = " + std::to_string(k),
                         view);
  }
  const Vector scale = w.tail(rank).cwiseSqrt().cwiseInverse();
  return es.eigenvectors().rightCols(rank) * scale.asDiagonal();
}

}  // namespace

CcaResult classical_cca(const TwoViewProblem& prob, Eigen::Index k, double rank_tol) {
  if (k < 1) throw ContractViolation("classical_cca: k must be >= 1");
  const double tol_a = rank_tol > 0.0 ? rank_tol : default_rank_tol(prob.n, prob.q);
  const double tol_b = rank_tol > 0.0 ? rank_tol : default_rank_tol(prob.m, prob.q);
  const Matrix wa = inverse_sqrt_on_range(prob.a, tol_a, k, 1);
  const Matrix wb = inverse_sqrt_on_range(prob.b, tol_b, k, 2);

  const Matrix t = wa.transpose() * prob.c * wb;
  Eigen::BDCSVD<Matrix> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix u = svd.matrixU().leftCols(k);
  Matrix v = svd.matrixV().leftCols(k);
  apply_sign_convention(u, &v);
  return CcaResult{wa * u, wb * v, svd.singularValues().head(k)};
}

StiefelPoint post_orthogonalize(const Matrix& x) { return StiefelPoint::orthonormalize(x); }

}  // namespace occa
