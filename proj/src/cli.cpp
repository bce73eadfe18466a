#include "occa/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "occa/data_io.hpp"
#include "occa/errors.hpp"
#include "occa/omcca.hpp"
#include "occa/scf.hpp"
#include "occa/two_view.hpp"
#include "occa/weighting.hpp"

namespace occa {

namespace {

using nlohmann::json;

struct InputFlags {
  bool no_center = false;
  bool header = false;
};

struct SolverFlags {
  int k = 1;
  double eps_scf = 1e-5;
  int max_iter = 30;
  std::string eigen = "auto";
  std::uint64_t seed = 0;
  bool time = false;
};

struct Flags {
  InputFlags input;
  SolverFlags solver;

  // gen
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::Index q = 0;
  double lambda = 2e-4;

  // two-view inputs
  std::string x_path;
  std::string y_path;
  double eps_alt = 1e-8;
  int max_outer = 30;
  double rank_tol = 0.0;

  // multiset
  std::vector<std::string> views;
  std::vector<std::string> projections;
  std::string weights = "uniform";
  double bandwidth = 20.0;
  std::string scheme = "gs";
  int threads = 1;
  double eps_outer = 1e-6;
  int max_cycles = 100;
  bool orthogonalize = false;

  std::string out;
  std::string report;
};

int default_threads() {
  const char* env = std::getenv("OCCA_KIT_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  return (end != nullptr && *end == '\0' && v >= 1 && v <= 1024) ? static_cast<int>(v) : 1;
}

// NaN and infinities become null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

Matrix read_view(const std::string& path, const InputFlags& in) {
  Matrix s = load_matrix(path, CsvOptions{in.header});
  return in.no_center ? s : center(s);
}

ScfConfig scf_config(const SolverFlags& f) {
  ScfConfig cfg;
  cfg.eps_scf = f.eps_scf;
  cfg.max_iter = f.max_iter;
  cfg.eigen.seed = f.seed;
  if (f.eigen == "dense") {
    cfg.eigen.method = EigenMethod::kDense;
  } else if (f.eigen == "iterative") {
    cfg.eigen.method = EigenMethod::kIterative;
  } else {
    cfg.eigen.method = EigenMethod::kAutomatic;
  }
  return cfg;
}

json solver_config(const Flags& f) {
  return json{{"k", f.solver.k},
              {"eps_scf", f.solver.eps_scf},
              {"max_iter", f.solver.max_iter},
              {"eigen", f.solver.eigen},
              {"center", !f.input.no_center},
              {"header", f.input.header}};
}

json base_report(const std::string& solver, const Flags& f) {
  json r;
  r["schema_version"] = kReportSchemaVersion;
  r["solver"] = solver;
  r["k"] = f.solver.k;
  r["seed"] = f.solver.seed;
  r["wall_time_seconds"] = nullptr;
  return r;
}

std::string report_path(const Flags& f) { return f.report.empty() ? f.out + "_report.json" : f.report; }

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

int cmd_gen(const Flags& f, std::ostream& out, std::ostream& err) {
  const SyntheticSpec spec{f.m, f.n, f.q, f.lambda, f.solver.seed};
  const LatentDims dims = latent_dims(f.m, f.n);
  err << "gen: d_z = " << dims.dz << ", d_w = " << dims.dw << "\n";
  const auto [sx, sy] = gen_synthetic(spec);
  save_matrix(sx, f.out + "_x.csv");
  save_matrix(sy, f.out + "_y.csv");
  out << "wrote " << f.out << "_x.csv (" << sx.rows() << "x" << sx.cols() << ") and " << f.out << "_y.csv ("
      << sy.rows() << "x" << sy.cols() << ")\n";
  return kExitOk;
}

int cmd_occa(const Flags& f, std::ostream& out, std::ostream&) {
  const Matrix s1 = read_view(f.x_path, f.input);
  const Matrix s2 = read_view(f.y_path, f.input);
  const TwoViewProblem prob = build_two_view(s1, s2);
  Stopwatch clock;
  const OccaReport r = occa_alternate(prob, f.solver.k, AltConfig{f.eps_alt, f.max_outer}, scf_config(f.solver));
  const double elapsed = clock.seconds();

  save_matrix(r.x.matrix(), f.out + "_x.csv");
  save_matrix(r.y.matrix(), f.out + "_y.csv");

  json rep = base_report("occa", f);
  rep["objective_trace"] = numbers(r.F_trace);
  rep["grad_norms"] = numbers(r.grad_norms);
  rep["gaps"] = numbers(r.gaps);
  rep["iterations"] = r.outer_iterations;
  rep["inner_iterations"] = r.inner_iterations;
  rep["psd_margins"] = numbers(r.psd_margins);
  rep["asymmetry"] = numbers(r.asymmetry);
  rep["termination_reason"] = to_string(r.termination_reason);
  rep["f_final"] = r.f_final;
  rep["F_final"] = r.F_trace.back();
  rep["grad_norm_final"] = r.grad_norm_final;
  if (f.solver.time) rep["wall_time_seconds"] = elapsed;
  json cfg = solver_config(f);
  cfg["x"] = f.x_path;
  cfg["y"] = f.y_path;
  cfg["eps_alt"] = f.eps_alt;
  cfg["max_outer"] = f.max_outer;
  rep["config"] = cfg;
  save_json(rep, report_path(f));

  out << "occa: f = " << r.f_final << " after " << r.outer_iterations << " outer steps ("
      << to_string(r.termination_reason) << ")\n";
  return r.termination_reason == TerminationReason::kMaxIter ? kExitMaxIter : kExitOk;
}

json weights_json(const WeightMatrix& w, double bandwidth) {
  json pairs = json::array();
  for (const auto& e : w.nonzero_pairs()) pairs.push_back(json{{"i", e.i + 1}, {"j", e.j + 1}, {"rho", e.value}});
  return json{{"scheme", w.spec.to_string()},
              {"bandwidth", bandwidth},
              {"rho", to_json(w.rho)},
              {"rho_hat", to_json(w.rho_hat)},
              {"pairs", pairs}};
}

int cmd_omcca(const Flags& f, std::ostream& out, std::ostream&) {
  std::vector<Matrix> views;
  for (const auto& path : f.views) views.push_back(read_view(path, f.input));
  const WeightMatrix weights = make_weights(views, WeightSpec::parse(f.weights), f.bandwidth);

  OmccaConfig cfg;
  cfg.eps_outer = f.eps_outer;
  cfg.max_cycles = f.max_cycles;
  cfg.scheme = f.scheme == "jacobi" ? CycleScheme::kJacobi : CycleScheme::kGaussSeidel;
  cfg.scf = scf_config(f.solver);
  cfg.threads = f.threads;
  cfg.rank_tol = f.rank_tol;

  json c = solver_config(f);
  c["views"] = f.views;
  c["scheme"] = f.scheme;
  c["eps_outer"] = f.eps_outer;
  c["max_cycles"] = f.max_cycles;
  c["weights"] = f.weights;
  c["bandwidth"] = f.bandwidth;
  c["rank_tol"] = f.rank_tol;

  Stopwatch clock;
  OmccaReport r;
  try {
    r = rcomcca(views, f.solver.k, weights, cfg);
  } catch (const IsolatedView& e) {
    // Still echo the weights so the selection can be inspected.
    json rep = base_report("omcca", f);
    rep["termination_reason"] = "isolated_view";
    rep["error"] = e.what();
    rep["isolated_view"] = e.view();
    rep["weights"] = weights_json(weights, f.bandwidth);
    rep["config"] = c;
    save_json(rep, report_path(f));
    throw;
  }
  const double elapsed = clock.seconds();

  std::vector<Matrix> projections;
  for (std::size_t i = 0; i < r.projections.size(); ++i) {
    projections.push_back(r.projections[i].matrix());
    save_matrix(projections.back(), f.out + "_x" + std::to_string(i + 1) + ".csv");
  }

  json rep = base_report("omcca", f);
  rep["objective_trace"] = numbers(r.g_trace);
  rep["grad_norms"] = numbers(r.grad_norms);
  rep["gaps"] = numbers(r.gaps);
  rep["iterations"] = r.cycles;
  rep["cycle_sums"] = numbers(r.cycle_sums);
  rep["per_cycle_subproblem_iters"] = r.per_cycle_subproblem_iters;
  rep["terms_per_cycle"] = r.terms_per_cycle;
  rep["rejected_updates"] = r.rejected_updates;
  rep["ranks"] = r.ranks;
  rep["termination_reason"] = to_string(r.termination_reason);
  rep["f_final"] = total_correlation(projections, views, weights);
  rep["weights"] = weights_json(weights, f.bandwidth);
  if (f.solver.time) rep["wall_time_seconds"] = elapsed;
  rep["config"] = c;
  save_json(rep, report_path(f));

  out << "omcca: g = " << r.g_trace.back() << " after " << r.cycles << " cycles ("
      << to_string(r.termination_reason) << ")\n";
  return r.termination_reason == TerminationReason::kMaxIter ? kExitMaxIter : kExitOk;
}

int cmd_cca_baseline(const Flags& f, std::ostream& out, std::ostream&) {
  const Matrix s1 = read_view(f.x_path, f.input);
  const Matrix s2 = read_view(f.y_path, f.input);
  const TwoViewProblem prob = build_two_view(s1, s2);
  Stopwatch clock;
  const CcaResult r = classical_cca(prob, f.solver.k, f.rank_tol);
  const double elapsed = clock.seconds();
  save_matrix(r.x1, f.out + "_x.csv");
  save_matrix(r.x2, f.out + "_y.csv");

  json rep = base_report("cca-baseline", f);
  rep["objective_trace"] = json::array();
  rep["grad_norms"] = json::array();
  rep["gaps"] = json::array();
  rep["iterations"] = 0;
  rep["termination_reason"] = "closed_form";
  rep["correlations"] = numbers(std::vector<double>(r.correlations.data(), r.correlations.data() + r.correlations.size()));
  rep["f_raw"] = objective_f(r.x1, r.x2, prob);
  bool deficient = false;
  double f_orth = 0.0;
  try {
    f_orth = objective_f(post_orthogonalize(r.x1).matrix(), post_orthogonalize(r.x2).matrix(), prob);
  } catch (const RankDeficiency&) {
    deficient = true;
  }
  rep["f_post_orthogonalized"] = f_orth;
  rep["rank_deficient"] = deficient;
  if (f.solver.time) rep["wall_time_seconds"] = elapsed;
  json c = solver_config(f);
  c["x"] = f.x_path;
  c["y"] = f.y_path;
  c["rank_tol"] = f.rank_tol;
  rep["config"] = c;
  save_json(rep, report_path(f));
  out << "cca-baseline: top correlation = " << r.correlations(0) << "\n";
  return kExitOk;
}

int cmd_eval(const Flags& f, std::ostream& out, std::ostream&) {
  if (f.views.size() != f.projections.size()) {
    throw ContractViolation("eval: got " + std::to_string(f.views.size()) + " views but " +
                            std::to_string(f.projections.size()) + " projections");
  }
  std::vector<Matrix> views;
  std::vector<Matrix> projections;
  for (const auto& path : f.views) views.push_back(read_view(path, f.input));
  for (const auto& path : f.projections) projections.push_back(load_matrix(path));
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (projections[i].rows() != views[i].rows() || projections[i].cols() != projections.front().cols()) {
      throw ContractViolation("eval: projection " + std::to_string(i + 1) + " is " +
                              std::to_string(projections[i].rows()) + "x" + std::to_string(projections[i].cols()) +
                              ", view has " + std::to_string(views[i].rows()) + " rows");
    }
  }

  json rep;
  rep["schema_version"] = kReportSchemaVersion;
  rep["orthogonalized"] = f.orthogonalize;
  rep["rank_deficient"] = false;
  rep["deficient_view"] = nullptr;
  if (f.orthogonalize) {
    for (std::size_t i = 0; i < projections.size(); ++i) {
      try {
        projections[i] = post_orthogonalize(projections[i]).matrix();
      } catch (const RankDeficiency&) {
        rep["rank_deficient"] = true;
        rep["deficient_view"] = i + 1;
        break;
      }
    }
  }

  const WeightMatrix weights = make_weights(views, WeightSpec::parse(f.weights), f.bandwidth);
  if (rep["rank_deficient"].get<bool>()) {
    if (views.size() == 2) {
      rep["f"] = 0.0;
      rep["F"] = 0.0;
    }
    rep["total_correlation"] = 0.0;
  } else {
    if (views.size() == 2) {
      const TwoViewProblem prob = build_two_view(views[0], views[1]);
      rep["f"] = objective_f(projections[0], projections[1], prob);
      rep["F"] = objective_F(projections[0], projections[1], prob);
    }
    rep["total_correlation"] = total_correlation(projections, views, weights);
  }
  rep["weights"] = weights_json(weights, f.bandwidth);

  const std::string text = rep.dump(2) + "\n";
  if (f.out.empty()) {
    out << text;
  } else {
    save_json(rep, f.out);
  }
  return kExitOk;
}

void add_input_flags(CLI::App* cmd, Flags& f) {
  cmd->add_flag("--no-center", f.input.no_center, "Do not center the views on load");
  cmd->add_flag("--header", f.input.header, "Skip the first line of every CSV input");
}

void add_solver_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--k", f.solver.k, "Number of projection directions")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--eps-scf", f.solver.eps_scf, "SCF tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", f.solver.max_iter, "SCF iteration cap")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--eigen", f.solver.eigen, "Inner eigensolver")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "dense", "iterative"}));
  cmd->add_option("--seed", f.solver.seed, "Seed for randomized inner steps")->capture_default_str();
  cmd->add_flag("--time", f.solver.time, "Record wall time in the report");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Flags f;
  f.threads = default_threads();

  CLI::App app{"Orthogonal canonical correlation analysis"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic two-view data set");
  gen->add_option("--m", f.m, "Rows of the first view")->required()->check(CLI::PositiveNumber);
  gen->add_option("--n", f.n, "Rows of the second view")->required()->check(CLI::PositiveNumber);
  gen->add_option("--q", f.q, "Samples")->required()->check(CLI::PositiveNumber);
  gen->add_option("--lambda", f.lambda, "Noise scale")->capture_default_str()->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", f.solver.seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", f.out, "Output prefix")->required();

  auto* occa = app.add_subcommand("occa", "Two-view orthogonal CCA");
  occa->add_option("--x", f.x_path, "First view CSV (features x samples)")->required();
  occa->add_option("--y", f.y_path, "Second view CSV")->required();
  add_input_flags(occa, f);
  add_solver_flags(occa, f);
  occa->add_option("--eps-alt", f.eps_alt, "Outer tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  occa->add_option("--max-outer", f.max_outer, "Outer step cap")->capture_default_str()->check(CLI::PositiveNumber);
  occa->add_option("--out", f.out, "Output prefix")->required();
  occa->add_option("--report", f.report, "Report path (default <prefix>_report.json)");

  auto* omcca = app.add_subcommand("omcca", "Multiset orthogonal CCA");
  omcca->add_option("--view", f.views, "View CSV, repeat per view")->required()->expected(1, -1)->take_all();
  add_input_flags(omcca, f);
  add_solver_flags(omcca, f);
  omcca->add_option("--weights", f.weights, "uniform, tree or top:<p>")->capture_default_str();
  omcca->add_option("--bandwidth", f.bandwidth, "Soft-max bandwidth")->capture_default_str();
  omcca->add_option("--scheme", f.scheme, "Cycle scheme")
      ->capture_default_str()
      ->check(CLI::IsMember({"gs", "jacobi"}));
  omcca->add_option("--threads", f.threads, "Worker threads for Jacobi cycles (env OCCA_KIT_THREADS)")
      ->check(CLI::PositiveNumber);
  omcca->add_option("--eps-outer", f.eps_outer, "Cycle tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  omcca->add_option("--max-cycles", f.max_cycles, "Cycle cap")->capture_default_str()->check(CLI::PositiveNumber);
  omcca->add_option("--rank-tol", f.rank_tol, "Relative rank tolerance (0: automatic)")->check(CLI::NonNegativeNumber);
  omcca->add_option("--out", f.out, "Output prefix")->required();
  omcca->add_option("--report", f.report, "Report path (default <prefix>_report.json)");

  auto* cca = app.add_subcommand("cca-baseline", "Classical CCA by whitening");
  cca->add_option("--x", f.x_path, "First view CSV")->required();
  cca->add_option("--y", f.y_path, "Second view CSV")->required();
  add_input_flags(cca, f);
  cca->add_option("--k", f.solver.k, "Number of directions")->required()->check(CLI::PositiveNumber);
  cca->add_option("--rank-tol", f.rank_tol, "Relative rank tolerance (0: automatic)")->check(CLI::NonNegativeNumber);
  cca->add_option("--seed", f.solver.seed, "Recorded in the report")->capture_default_str();
  cca->add_flag("--time", f.solver.time, "Record wall time in the report");
  cca->add_option("--out", f.out, "Output prefix")->required();
  cca->add_option("--report", f.report, "Report path (default <prefix>_report.json)");

  auto* eval = app.add_subcommand("eval", "Evaluate projections on data");
  eval->add_option("--view", f.views, "View CSV, repeat per view")->required()->expected(1, -1)->take_all();
  eval->add_option("--proj", f.projections, "Projection CSV, one per view")->required()->expected(1, -1)->take_all();
  add_input_flags(eval, f);
  eval->add_flag("--orthogonalize", f.orthogonalize, "QR-orthonormalize the projections first");
  eval->add_option("--weights", f.weights, "Weights for total_correlation")->capture_default_str();
  eval->add_option("--bandwidth", f.bandwidth, "Soft-max bandwidth")->capture_default_str();
  eval->add_option("--out", f.out, "Metrics path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(f, out, err);
    if (*occa) return cmd_occa(f, out, err);
    if (*omcca) {
      if (f.views.size() < 2) throw ContractViolation("omcca needs at least two --view files");
      WeightSpec::parse(f.weights);
      return cmd_omcca(f, out, err);
    }
    if (*cca) return cmd_cca_baseline(f, out, err);
    if (*eval) {
      WeightSpec::parse(f.weights);
      return cmd_eval(f, out, err);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace occa
