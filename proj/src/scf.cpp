#include "occa/scf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "occa/errors.hpp"

namespace occa {

// SpdMatrix --------------------------------------------------------------------

SpdMatrix::SpdMatrix(Matrix a, Trusted) : a_(std::make_shared<const Matrix>(std::move(a))) {
  l1_ = entrywise_l1(*a_);
  max_ = max_abs(*a_);
}

SpdMatrix::SpdMatrix(Matrix a) {
  if (a.rows() != a.cols() || a.rows() < 1) throw ContractViolation("SpdMatrix: A must be square");
  if (!a.allFinite()) throw ContractViolation("SpdMatrix: non-finite entries");
  if (max_abs(a - a.transpose()) > 1e-10) throw ContractViolation("SpdMatrix: A is not symmetric");
  a = sym(a);
  const double scale = max_abs(a);
  const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(a, Eigen::EigenvaluesOnly).eigenvalues()(0);
  if (!(lmin > 1e-12 * scale)) {
    throw ContractViolation("SpdMatrix: A is not positive definite (lambda_min = " + std::to_string(lmin) +
                            ")");
  }
  *this = SpdMatrix(std::move(a), Trusted{});
}

SpdMatrix SpdMatrix::diagonal(const Vector& values) {
  if (values.size() < 1 || !values.allFinite() || !(values.minCoeff() > 0.0)) {
    throw ContractViolation("SpdMatrix::diagonal: entries must be positive");
  }
  return SpdMatrix(Matrix(values.asDiagonal()), Trusted{});
}

SubproblemSpec::SubproblemSpec(SpdMatrix a, Matrix d) : a_(std::move(a)), d_(std::move(d)) {
  if (d_.rows() != a_.size()) throw ContractViolation("SubproblemSpec: D must have n rows");
  if (d_.cols() < 1 || d_.cols() > d_.rows()) throw ContractViolation("SubproblemSpec: need 1 <= k <= n");
  if (!d_.allFinite()) throw ContractViolation("SubproblemSpec: D has non-finite entries");
  if (max_abs(d_) == 0.0) throw ContractViolation("SubproblemSpec: D must be nonzero");
  d_l1_ = entrywise_l1(d_);
}

// Objective and first-order quantities ----------------------------------------

namespace {

void check_shape(const StiefelPoint& g, const SubproblemSpec& spec) {
  if (g.rows() != spec.n() || g.cols() != spec.k()) {
    throw ContractViolation("G must be " + std::to_string(spec.n()) + "x" + std::to_string(spec.k()));
  }
}

double checked_xi(const TraceTerms& t) {
  if (t.phi_d == 0.0) {
    throw UndefinedRatio("tr(G^T D) = 0, xi(G) undefined; realign G against D or perturb it");
  }
  return t.xi();
}

// A G - xi D - G M(G), which equals -(xi^2 / 2) grad eta(G).
Matrix kkt_matrix(const StiefelPoint& g, const SubproblemSpec& spec, double xi) {
  const Matrix& gm = g.matrix();
  const Matrix ag = spec.a() * gm;
  const Matrix m = sym(gm.transpose() * ag - xi * (gm.transpose() * spec.d()));
  return ag - xi * spec.d() - gm * m;
}

double min_sym_eigenvalue(const Matrix& w) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(sym(w), Eigen::EigenvaluesOnly).eigenvalues()(0);
}

}  // namespace

TraceTerms trace_terms(const StiefelPoint& g, const SubproblemSpec& spec) {
  check_shape(g, spec);
  const Matrix& gm = g.matrix();
  return TraceTerms{(gm.transpose() * spec.a() * gm).trace(), (gm.transpose() * spec.d()).trace()};
}

double eta(const StiefelPoint& g, const SubproblemSpec& spec) {
  const TraceTerms t = trace_terms(g, spec);
  return t.phi_d * t.phi_d / t.phi_a;
}

Matrix m_matrix(const StiefelPoint& g, const SubproblemSpec& spec) {
  const double xi = checked_xi(trace_terms(g, spec));
  const Matrix& gm = g.matrix();
  return sym(gm.transpose() * spec.a() * gm - xi * (gm.transpose() * spec.d()));
}

Matrix grad_eta(const StiefelPoint& g, const SubproblemSpec& spec) {
  const double xi = checked_xi(trace_terms(g, spec));
  return (-2.0 / (xi * xi)) * kkt_matrix(g, spec, xi);
}

Matrix build_e(const StiefelPoint& g, const SubproblemSpec& spec) {
  const double xi = checked_xi(trace_terms(g, spec));
  const Matrix dg = spec.d() * g.matrix().transpose();
  return sym(spec.a() - xi * (dg + dg.transpose()));
}

double kkt_residual(const StiefelPoint& g, const SubproblemSpec& spec) {
  const double xi = checked_xi(trace_terms(g, spec));
  const Matrix w = g.matrix().transpose() * spec.d();
  return std::max(max_abs(kkt_matrix(g, spec, xi)), max_abs(w - w.transpose()));
}

double scaled_gradient_norm(const StiefelPoint& g, const SubproblemSpec& spec) {
  const double xi = checked_xi(trace_terms(g, spec));
  const double grad_l1 = entrywise_l1(kkt_matrix(g, spec, xi)) * 2.0 / (xi * xi);
  const double value = grad_l1 / (xi * xi * (spec.spd().l1() + spec.d_l1()));
  if (!std::isfinite(value) || value > 1e300) return 1e300;
  return value;
}

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kGradTol:
      return "grad_tol";
    case TerminationReason::kRelChangeTol:
      return "rel_change_tol";
    case TerminationReason::kMaxIter:
      return "max_iter";
  }
  return "unknown";
}

// SCF iteration ----------------------------------------------------------------

namespace {

bool ratio_vanishes(const StiefelPoint& g, const SubproblemSpec& spec) {
  const double phi_d = (g.matrix().transpose() * spec.d()).trace();
  return !(phi_d > 1e-14 * spec.d().norm());
}

// Aligns G against D and, if tr(G^T D) still vanishes (G^T D = 0), perturbs
// G by Gaussian noise of scale 1e-3 and retries up to three times.
StiefelPoint align_with_fallback(const StiefelPoint& g, const SubproblemSpec& spec, std::mt19937_64& rng,
                                 int* perturbations) {
  StiefelPoint current = align(g, spec.d());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int attempt = 0; attempt < 3 && ratio_vanishes(current, spec); ++attempt) {
    Matrix noisy = current.matrix();
    for (Eigen::Index j = 0; j < noisy.cols(); ++j)
      for (Eigen::Index i = 0; i < noisy.rows(); ++i) noisy(i, j) += 1e-3 * normal(rng);
    current = align(StiefelPoint::orthonormalize(noisy), spec.d());
    if (perturbations != nullptr) ++*perturbations;
  }
  if (ratio_vanishes(current, spec)) {
    throw UndefinedRatio("tr(G^T D) stays 0 after alignment and 3 perturbations");
  }
  return current;
}

struct NextIterate {
  StiefelPoint basis;
  double gap;
  bool dense_fallback;
};

NextIterate smallest_eigenbasis(const Matrix& e, const StiefelPoint& previous, const ScfConfig& cfg) {
  const Eigen::Index n = e.rows();
  const Eigen::Index k = previous.cols();
  const EigenOptions& opt = cfg.eigen;
  const bool dense = opt.method == EigenMethod::kDense ||
                     (opt.method == EigenMethod::kAutomatic && n <= opt.dense_limit);
  if (!dense) {
    EigenOptions warm = opt;
    warm.warm_start = &previous.matrix();
    EigenResult r = detail::lobpcg_smallest(e, k, warm);
    // An inexact basis is still a valid SCF step as long as it does not
    // increase tr(G^T E G) relative to the previous iterate.
    const double before = (previous.matrix().transpose() * e * previous.matrix()).trace();
    const double after = (r.basis.matrix().transpose() * e * r.basis.matrix()).trace();
    if (r.converged || after <= before) return {std::move(r.basis), r.gap, false};
  }
  EigenOptions exact = opt;
  exact.method = EigenMethod::kDense;
  EigenResult r = k_smallest_eigenbasis(e, k, exact);
  return {std::move(r.basis), r.gap, !dense};
}

}  // namespace

ScfReport scf_solve(const SubproblemSpec& spec, const StiefelPoint& g0, const ScfConfig& cfg) {
  check_shape(g0, spec);
  if (!(cfg.eps_scf > 0.0) || cfg.max_iter < 1) {
    throw ContractViolation("ScfConfig: need eps_scf > 0 and max_iter >= 1");
  }
  std::mt19937_64 rng(cfg.eigen.seed);
  int perturbations = 0;
  StiefelPoint g = align_with_fallback(g0, spec, rng, &perturbations);

  ScfReport report{g, {}, {}, {}, {}, 0, TerminationReason::kMaxIter, 0, 0};
  auto record = [&](const StiefelPoint& current) {
    report.eta_trace.push_back(eta(current, spec));
    report.grad_norms.push_back(scaled_gradient_norm(current, spec));
    report.psd_margins.push_back(min_sym_eigenvalue(spec.d().transpose() * current.matrix()));
  };
  record(g);

  // With k = n the denominator is constant and the aligned start is optimal.
  if (spec.k() == spec.n()) {
    report.solution = g;
    report.termination_reason = TerminationReason::kGradTol;
    return report;
  }

  const double rel_tol = std::pow(cfg.eps_scf, 1.5);
  for (int nu = 1; nu <= cfg.max_iter; ++nu) {
    const Matrix e = build_e(g, spec);
    NextIterate next = smallest_eigenbasis(e, g, cfg);
    report.gaps.push_back(next.gap);
    if (next.dense_fallback) ++report.dense_fallbacks;

    StiefelPoint candidate = align(next.basis, spec.d());
    report.iterations = nu;
    if (ratio_vanishes(candidate, spec)) {
      // Transient tr(G^T D) = 0: record eta = 0 and keep iterating from a
      // perturbed point.
      ++report.zero_ratio_events;
      report.eta_trace.push_back(0.0);
      report.grad_norms.push_back(1e300);
      report.psd_margins.push_back(min_sym_eigenvalue(spec.d().transpose() * candidate.matrix()));
      g = align_with_fallback(candidate, spec, rng, &perturbations);
      continue;
    }
    const double previous_eta = report.eta_trace.back();
    g = std::move(candidate);
    record(g);

    const double current_eta = report.eta_trace.back();
    if (report.grad_norms.back() <= cfg.eps_scf) {
      report.termination_reason = TerminationReason::kGradTol;
      break;
    }
    if (std::abs(current_eta - previous_eta) <= rel_tol * std::abs(current_eta)) {
      report.termination_reason = TerminationReason::kRelChangeTol;
      break;
    }
  }
  report.solution = g;
  return report;
}

ScfReport scf_solve(const SubproblemSpec& spec, const ScfConfig& cfg) {
  return scf_solve(spec, StiefelPoint::leading_identity(spec.n(), spec.k()), cfg);
}

// Second-order test -------------------------------------------------------------

SecondOrderReport second_order_check(const StiefelPoint& g, const SubproblemSpec& spec, int samples,
                                     std::uint64_t seed) {
  check_shape(g, spec);
  if (samples < 1) throw ContractViolation("second_order_check: samples must be >= 1");

  const TraceTerms t = trace_terms(g, spec);
  const double value = t.phi_d * t.phi_d / t.phi_a;
  const Matrix& gm = g.matrix();
  Matrix m = Matrix::Zero(spec.k(), spec.k());
  if (t.phi_d != 0.0) {
    // At phi_D = 0 the Euclidean gradient vanishes identically (eta is
    // quadratic in phi_D), so only phi_D != 0 needs a KKT test.
    const double xi = t.xi();
    const double scale_r = spec.spd().max_norm() + std::abs(xi) * max_abs(spec.d());
    const Matrix w = gm.transpose() * spec.d();
    const double r1 = max_abs(kkt_matrix(g, spec, xi)) / scale_r;
    const double r2 = max_abs(w - w.transpose()) / max_abs(spec.d());
    if (r1 > 1e-4 || r2 > 1e-4) {
      throw ContractViolation("second_order_check: G is not stationary (scaled KKT residual " +
                              std::to_string(std::max(r1, r2)) + ")");
    }
    m = sym(gm.transpose() * spec.a() * gm - xi * w);
  }

  const double base_scale = value * (spec.a().norm() + m.norm()) + spec.d().squaredNorm();
  SecondOrderReport report{true, std::numeric_limits<double>::infinity(), samples};
  for (int s = 0; s < samples; ++s) {
    const std::uint64_t sample_seed = seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(s + 1));
    const Matrix h = sample_tangent(g, sample_seed);
    const double dh = (spec.d().transpose() * h).trace();
    const double lhs = dh * dh;
    const double rhs = value * ((h.transpose() * spec.a() * h).trace() - (m * (h.transpose() * h)).trace());
    const double scale = h.squaredNorm() * base_scale;
    const double margin = scale > 0.0 ? (rhs - lhs) / scale : 0.0;
    report.worst_margin = std::min(report.worst_margin, margin);
  }
  report.passed = report.worst_margin >= -1e-8;
  return report;
}

}  // namespace occa
