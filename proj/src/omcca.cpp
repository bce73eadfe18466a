#include "occa/omcca.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <utility>

#include "occa/errors.hpp"

namespace occa {

std::vector<RangeReducedView> reduce_views(const std::vector<Matrix>& views, double rank_tol) {
  std::vector<RangeReducedView> out;
  out.reserve(views.size());
  for (std::size_t i = 0; i < views.size(); ++i) {
    const Matrix& s = views[i];
    const int label = static_cast<int>(i + 1);
    if (s.cols() != views.front().cols()) throw ContractViolation("reduce_views: views must share q");
    if (s.size() == 0 || max_abs(s) == 0.0) throw DegenerateView("view " + std::to_string(label) + " is zero", label);
    Eigen::BDCSVD<Matrix> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double tol =
        (rank_tol > 0.0 ? rank_tol
                        : static_cast<double>(std::max(s.rows(), s.cols())) * std::numeric_limits<double>::epsilon()) *
        sv(0);
    Eigen::Index r = 0;
    while (r < sv.size() && sv(r) > tol) ++r;
    Matrix u = svd.matrixU().leftCols(r);
    Matrix v = svd.matrixV().leftCols(r);
    apply_sign_convention(u, &v);
    out.push_back(RangeReducedView{std::move(u), sv.head(r), std::move(v), r});
  }
  return out;
}

namespace {

double denominator(const StiefelPoint& xhat, const RangeReducedView& view) {
  return (view.sigma.asDiagonal() * xhat.matrix()).squaredNorm();
}

void check_isolated(Eigen::Index s, const WeightMatrix& weights) {
  for (Eigen::Index j = 0; j < weights.size; ++j)
    if (j != s && weights.rho(s, j) > 0.0) return;
  throw IsolatedView("view " + std::to_string(s + 1) + " has no positive weight to any other view",
                     static_cast<int>(s + 1));
}

// Evaluates D_s during the cycles. With uniform weights every D_s shares the
// accumulator W = sum_j V_j Sigma_j Xhat_j / sqrt(t_j), so
// D_s = rho Sigma_s V_s^T (W - own_s). Otherwise the pairwise kernels
// Sigma_s V_s^T V_j Sigma_j are cached for the selected pairs only.
class DsEvaluator {
 public:
  DsEvaluator(const std::vector<RangeReducedView>& reduced, const WeightMatrix& weights)
      : reduced_(reduced), weights_(weights), uniform_(weights.spec.scheme == WeightScheme::kUniform) {
    const auto l = static_cast<Eigen::Index>(reduced.size());
    if (uniform_) return;
    for (Eigen::Index s = 0; s < l; ++s) {
      for (Eigen::Index j = 0; j < l; ++j) {
        if (j == s || !(weights.rho(s, j) > 0.0)) continue;
        kernels_.emplace(std::make_pair(s, j), reduced[s].sigma.asDiagonal() * (reduced[s].v.transpose() * reduced[j].v) *
                                                   reduced[j].sigma.asDiagonal());
      }
    }
  }

  void reset(const std::vector<StiefelPoint>& xhat) {
    if (!uniform_) return;
    own_.clear();
    for (std::size_t j = 0; j < xhat.size(); ++j) own_.push_back(own_term(static_cast<Eigen::Index>(j), xhat[j]));
    total_ = own_.front();
    for (std::size_t j = 1; j < own_.size(); ++j) total_ += own_[j];
  }

  // Gauss-Seidel bookkeeping after view s changed.
  void update(Eigen::Index s, const StiefelPoint& xhat_s) {
    if (!uniform_) return;
    Matrix fresh = own_term(s, xhat_s);
    total_ += fresh - own_[s];
    own_[s] = std::move(fresh);
  }

  Matrix ds(Eigen::Index s, const std::vector<StiefelPoint>& xhat, int& terms) const {
    const auto l = static_cast<Eigen::Index>(reduced_.size());
    const RangeReducedView& vs = reduced_[s];
    if (uniform_) {
      terms += static_cast<int>(l - 1);
      Eigen::Index partner = s == 0 ? 1 : 0;
      return weights_.rho(s, partner) * (vs.sigma.asDiagonal() * (vs.v.transpose() * (total_ - own_[s])));
    }
    Matrix d = Matrix::Zero(vs.r, xhat[s].cols());
    for (Eigen::Index j = 0; j < l; ++j) {
      if (j == s || !(weights_.rho(s, j) > 0.0)) continue;
      d += (weights_.rho(s, j) / std::sqrt(denominator(xhat[j], reduced_[j]))) *
           (kernels_.at({s, j}) * xhat[j].matrix());
      ++terms;
    }
    return d;
  }

 private:
  Matrix own_term(Eigen::Index j, const StiefelPoint& xhat_j) const {
    const RangeReducedView& vj = reduced_[j];
    return vj.v * (vj.sigma.asDiagonal() * xhat_j.matrix()) / std::sqrt(denominator(xhat_j, vj));
  }

  const std::vector<RangeReducedView>& reduced_;
  const WeightMatrix& weights_;
  bool uniform_;
  std::map<std::pair<Eigen::Index, Eigen::Index>, Matrix> kernels_;
  std::vector<Matrix> own_;
  Matrix total_;
};

struct SubproblemOutcome {
  explicit SubproblemOutcome(StiefelPoint start) : xhat(std::move(start)) {}

  StiefelPoint xhat;
  double value = 0.0;  // sqrt(eta) at the returned point, i.e. its MOCCA-i1 objective
  int iterations = 0;
  double grad_norm = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  bool rejected = false;
  std::exception_ptr error;
};

SubproblemOutcome solve_view(const SpdMatrix& sigma2, Matrix d, const StiefelPoint& warm, const ScfConfig& cfg,
                             bool keep_if_worse) {
  SubproblemOutcome out(warm);
  if (max_abs(d) == 0.0) return out;  // no correlation signal; stay at the stale iterate
  const SubproblemSpec spec(sigma2, std::move(d));
  ScfReport r = scf_solve(spec, warm, cfg);
  const double stale = eta(warm, spec);
  for (double z : r.gaps) out.gap = std::isnan(out.gap) ? z : std::min(out.gap, z);
  if (keep_if_worse && r.eta_trace.back() < stale) {
    out.rejected = true;
    out.iterations = r.iterations;
    out.grad_norm = r.grad_norms.front();
    const double lin = (warm.matrix().transpose() * spec.d()).trace();
    out.value = lin / std::sqrt(trace_terms(warm, spec).phi_a);
    return out;
  }
  out.xhat = std::move(r.solution);
  out.value = std::sqrt(r.eta_trace.back());
  out.iterations = r.iterations;
  out.grad_norm = r.grad_norms.back();
  return out;
}

}  // namespace

Matrix compute_ds(Eigen::Index s, const std::vector<StiefelPoint>& xhat, const WeightMatrix& weights,
                  const std::vector<RangeReducedView>& reduced, int* terms) {
  const auto l = static_cast<Eigen::Index>(reduced.size());
  if (static_cast<Eigen::Index>(xhat.size()) != l || weights.size != l || s < 0 || s >= l) {
    throw ContractViolation("compute_ds: inconsistent number of views");
  }
  check_isolated(s, weights);
  const RangeReducedView& vs = reduced[s];
  Matrix acc = Matrix::Zero(vs.v.rows(), xhat[s].cols());
  for (Eigen::Index j = 0; j < l; ++j) {
    if (j == s || !(weights.rho(s, j) > 0.0)) continue;
    const double t = denominator(xhat[j], reduced[j]);
    if (!(t > 0.0)) throw DegenerateView("compute_ds: zero denominator", static_cast<int>(j + 1));
    acc += (weights.rho(s, j) / std::sqrt(t)) * (reduced[j].v * (reduced[j].sigma.asDiagonal() * xhat[j].matrix()));
    if (terms != nullptr) ++*terms;
  }
  return vs.sigma.asDiagonal() * (vs.v.transpose() * acc);
}

double g_objective(const std::vector<StiefelPoint>& xhat, const WeightMatrix& weights,
                   const std::vector<RangeReducedView>& reduced) {
  const auto l = static_cast<Eigen::Index>(reduced.size());
  if (static_cast<Eigen::Index>(xhat.size()) != l || weights.size != l) {
    throw ContractViolation("g_objective: inconsistent number of views");
  }
  std::vector<Matrix> z;
  std::vector<double> root;
  for (Eigen::Index i = 0; i < l; ++i) {
    const double t = denominator(xhat[i], reduced[i]);
    if (!(t > 0.0)) throw DegenerateView("g_objective: zero denominator", static_cast<int>(i + 1));
    root.push_back(std::sqrt(t));
    z.push_back(reduced[i].v * (reduced[i].sigma.asDiagonal() * xhat[i].matrix()));
  }
  double g = 0.0;
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index j = 0; j < l; ++j)
      if (i != j && weights.rho(i, j) > 0.0) g += weights.rho(i, j) * (z[i].transpose() * z[j]).trace() / (root[i] * root[j]);
  return g;
}

double total_correlation(const std::vector<Matrix>& projections, const std::vector<Matrix>& views,
                         const WeightMatrix& weights) {
  const auto l = static_cast<Eigen::Index>(views.size());
  if (static_cast<Eigen::Index>(projections.size()) != l || weights.size != l) {
    throw ContractViolation("total_correlation: inconsistent number of views");
  }
  std::vector<Matrix> z;
  std::vector<double> root;
  for (Eigen::Index i = 0; i < l; ++i) {
    if (projections[i].rows() != views[i].rows() || projections[i].cols() != projections.front().cols()) {
      throw ContractViolation("total_correlation: projection " + std::to_string(i + 1) + " has the wrong shape");
    }
    if (views[i].cols() != views.front().cols()) throw ContractViolation("total_correlation: views must share q");
    z.push_back(views[i].transpose() * projections[i]);
    const double t = z.back().squaredNorm();
    if (!(t > 0.0)) {
      throw DegenerateView("view " + std::to_string(i + 1) + " has zero variance in the projected subspace",
                           static_cast<int>(i + 1));
    }
    root.push_back(std::sqrt(t));
  }
  double f = 0.0;
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index j = 0; j < l; ++j)
      if (i != j && weights.rho(i, j) > 0.0) f += weights.rho(i, j) * (z[i].transpose() * z[j]).trace() / (root[i] * root[j]);
  return f;
}

OmccaReport rcomcca(const std::vector<Matrix>& views, Eigen::Index k, const WeightMatrix& weights,
                    const OmccaConfig& cfg) {
  if (views.size() < 2) throw ContractViolation("rcomcca: need at least two views");
  return rcomcca(reduce_views(views, cfg.rank_tol), k, weights, cfg);
}

OmccaReport rcomcca(const std::vector<RangeReducedView>& reduced, Eigen::Index k, const WeightMatrix& weights,
                    const OmccaConfig& cfg) {
  const auto l = static_cast<Eigen::Index>(reduced.size());
  if (l < 2) throw ContractViolation("rcomcca: need at least two views");
  if (weights.size != l) throw ContractViolation("rcomcca: weight matrix size differs from the number of views");
  if (!(cfg.eps_outer > 0.0) || cfg.max_cycles < 1) throw ContractViolation("OmccaConfig: need eps_outer > 0");
  if (k < 1) throw ContractViolation("rcomcca: k must be >= 1");
  const Eigen::Index q = reduced.front().v.rows();
  for (Eigen::Index i = 0; i < l; ++i) {
    if (k > reduced[i].r || k > q) {
      throw RankDeficiency("view " + std::to_string(i + 1) + " has rank " + std::to_string(reduced[i].r) +
                               " < k = " + std::to_string(k),
                           static_cast<int>(i + 1));
    }
    check_isolated(i, weights);
  }

  std::vector<SpdMatrix> sigma2;
  std::vector<StiefelPoint> xhat;
  OmccaReport report;
  for (const auto& view : reduced) {
    sigma2.push_back(SpdMatrix::diagonal(view.sigma.cwiseAbs2()));
    xhat.push_back(StiefelPoint::leading_identity(view.r, k));
    report.ranks.push_back(view.r);
  }

  DsEvaluator evaluator(reduced, weights);
  const int threads = std::max(1, cfg.threads);
  double g = 0.0;
  for (int cycle = 1; cycle <= cfg.max_cycles; ++cycle) {
    const double g0 = g;
    g = 0.0;
    int terms = 0;
    std::vector<int> iters(static_cast<std::size_t>(l), 0);
    double worst_grad = 0.0;
    double gap = std::numeric_limits<double>::quiet_NaN();
    auto note = [&](const SubproblemOutcome& o) {
      worst_grad = std::max(worst_grad, o.grad_norm);
      if (!std::isnan(o.gap)) gap = std::isnan(gap) ? o.gap : std::min(gap, o.gap);
    };
    evaluator.reset(xhat);

    if (cfg.scheme == CycleScheme::kJacobi) {
      std::vector<Matrix> ds;
      for (Eigen::Index s = 0; s < l; ++s) ds.push_back(evaluator.ds(s, xhat, terms));
      std::vector<SubproblemOutcome> outcomes(static_cast<std::size_t>(l), SubproblemOutcome(xhat[0]));
      auto work = [&](Eigen::Index s) {
        try {
          outcomes[s] = solve_view(sigma2[s], ds[s], xhat[s], cfg.scf, false);
        } catch (...) {
          outcomes[s].error = std::current_exception();
        }
      };
      if (threads == 1) {
        for (Eigen::Index s = 0; s < l; ++s) work(s);
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min<int>(threads, static_cast<int>(l)); ++t) {
          pool.emplace_back([&, t] {
            for (Eigen::Index s = t; s < l; s += threads) work(s);
          });
        }
        for (auto& th : pool) th.join();
      }
      // Merge in index order so the result does not depend on scheduling.
      for (Eigen::Index s = 0; s < l; ++s) {
        if (outcomes[s].error) std::rethrow_exception(outcomes[s].error);
        xhat[s] = outcomes[s].xhat;
        g += outcomes[s].value;
        iters[s] = outcomes[s].iterations;
        note(outcomes[s]);
      }
    } else {
      for (Eigen::Index s = 0; s < l; ++s) {
        SubproblemOutcome out = solve_view(sigma2[s], evaluator.ds(s, xhat, terms), xhat[s], cfg.scf, true);
        if (out.rejected) ++report.rejected_updates;
        xhat[s] = std::move(out.xhat);
        evaluator.update(s, xhat[s]);
        g += out.value;
        iters[s] = out.iterations;
        note(out);
      }
    }

    report.cycles = cycle;
    report.cycle_sums.push_back(g);
    report.g_trace.push_back(g_objective(xhat, weights, reduced));
    report.per_cycle_subproblem_iters.push_back(std::move(iters));
    report.terms_per_cycle.push_back(terms);
    report.grad_norms.push_back(worst_grad);
    report.gaps.push_back(gap);
    if (std::abs(g - g0) <= cfg.eps_outer * g) {
      report.termination_reason = TerminationReason::kRelChangeTol;
      break;
    }
  }

  report.reduced = xhat;
  for (Eigen::Index i = 0; i < l; ++i) report.projections.push_back(StiefelPoint::repair(reduced[i].u * xhat[i].matrix()));
  return report;
}

}  // namespace occa
