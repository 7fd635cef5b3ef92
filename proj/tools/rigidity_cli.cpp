// rigidity: steady states of -eps Lap(u) = e^u - 1 - a u with Neumann
// boundary conditions, and the estimates that force them to be constant.
//
//   rigidity constants|eigen|solve|sweep|bifurcate|check --config PATH
//            [--out DIR] [--seed N] [--threads N]
//
// Exit codes: 0 success, 2 validation, 3 numerical failure, 4 I/O.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rigidity/config.hpp"
#include "rigidity/continuation.hpp"
#include "rigidity/diagnostics.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/io.hpp"
#include "rigidity/mesh.hpp"
#include "rigidity/newton.hpp"
#include "rigidity/scalar_model.hpp"

namespace fs = std::filesystem;
using namespace rigidity;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct Overrides {
  std::string config_path;
  std::string out_dir;
  long seed = -1;
  int threads = 0;
  std::string field_path;
  std::string start;
  std::vector<double> m_values;
};

struct Context {
  ExperimentConfig config;
  DiscreteOperator op;
  fs::path out;
};

Context prepare(const Overrides& ov) {
  Context ctx;
  ctx.config = load_config(ov.config_path);
  if (!ov.out_dir.empty()) ctx.config.output_dir = ov.out_dir;
  if (ov.seed >= 0) ctx.config.seed = static_cast<unsigned long>(ov.seed);
  if (ov.threads > 0) ctx.config.threads = ov.threads;
  if (!ov.start.empty()) ctx.config.start = ov.start;
  if (!ov.m_values.empty()) ctx.config.m_values = ov.m_values;
  ctx.op = assemble(build_mesh(ctx.config));
  ctx.out = ctx.config.output_dir;
  std::error_code ec;
  fs::create_directories(ctx.out, ec);
  if (ec) throw IoError("cannot create output directory '" + ctx.out.string() + "'");
  return ctx;
}

NewtonOptions newton_options(const ExperimentConfig& c) {
  NewtonOptions opts;
  if (c.newton_tol) opts.tol = *c.newton_tol;
  return opts;
}

DiagnosticsTolerances diag_tolerances(const ExperimentConfig& c, const DiscreteOperator& op) {
  auto tol = DiagnosticsTolerances::from_newton_tol(newton_options(c).resolved_tol(op));
  if (c.diag_tol) tol.representation = *c.diag_tol;
  return tol;
}

EigenPair eigen_of(const Context& ctx) { return first_mode(ctx.op, ctx.config.eig_tol); }

double require_eps(const ExperimentConfig& c) {
  if (!c.eps) throw ValidationError("config must set eps for this command");
  return *c.eps;
}

void emit(const Json& j, const fs::path& path) {
  const std::string text = j.dump(2) + "\n";
  write_text_file(path.string(), text);
  std::cout << text;
}

int cmd_constants(const Overrides& ov) {
  Context ctx = prepare(ov);
  const auto& c = ctx.config;
  ConstantChain chain = constant_chain(c.a, c.q, ctx.op.area, ctx.op.diameter);
  const EigenPair pair = eigen_of(ctx);
  const GreenEstimate green = estimate_green_constants(ctx.op, c.green_samples, static_cast<unsigned>(c.seed));
  chain.k_green = green.k_green_est;

  Json j;
  j["constants"] = to_json(chain);
  j["mu1"] = pair.mu1;
  j["eps_star"] = bifurcation_epsilon(c.a, pair.mu1);
  Json thresholds = Json::array();
  for (double m : c.m_values) {
    Json t;
    t["M"] = m;
    t["lipschitz_K"] = chain.lipschitz_k_of(m);
    t["threshold"] = chain.threshold_of(m, pair.mu1);
    thresholds.push_back(std::move(t));
  }
  j["thresholds"] = std::move(thresholds);
  j["green"] = to_json(green);
  emit(j, ctx.out / "constants.json");
  return 0;
}

int cmd_eigen(const Overrides& ov) {
  Context ctx = prepare(ov);
  const EigenPair pair = eigen_of(ctx);
  Json j = to_json(pair);
  j["area"] = ctx.op.area;
  j["diameter"] = ctx.op.diameter;
  j["nodes"] = ctx.op.size();
  write_mesh_file((ctx.out / "mesh.txt").string(), ctx.op.mesh);
  write_field_file((ctx.out / "eigenfunction.field").string(),
                   {pair.phi1, ctx.config.eps.value_or(0.0), ctx.config.a});
  emit(j, ctx.out / "eigen.json");
  return 0;
}

Vec start_field(const std::string& spec, const Context& ctx) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw ValidationError("start must look like kind:value, got '" + spec + "'");
  const std::string kind = spec.substr(0, colon);
  const std::string value = spec.substr(colon + 1);
  const double a = ctx.config.a;
  const Eigen::Index n = ctx.op.size();
  auto parse_number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return x;
    } catch (const std::exception&) {
      throw ValidationError("cannot parse number '" + s + "' in start spec");
    }
  };
  if (kind == "const") {
    if (value == "xi") return Vec::Constant(n, find_xi(a));
    if (value == "loga") return Vec::Constant(n, std::log(a));
    return Vec::Constant(n, parse_number(value));
  }
  if (kind == "eig") {
    const double xi = find_xi(a);
    return (xi + parse_number(value) * xi * eigen_of(ctx).phi1.array()).matrix();
  }
  if (kind == "noise") {
    std::mt19937_64 rng(static_cast<unsigned long>(parse_number(value)));
    std::uniform_real_distribution<double> dist(-2.0, find_xi(a) + 2.0);
    return Vec::NullaryExpr(n, [&] { return dist(rng); });
  }
  if (kind == "file") {
    FieldFile f = read_field_file(value);
    if (f.values.size() != n) throw ValidationError("start field length does not match the mesh");
    return f.values;
  }
  throw ValidationError("unknown start kind '" + kind + "' (const, eig, noise, file)");
}

int cmd_solve(const Overrides& ov) {
  Context ctx = prepare(ov);
  const auto& c = ctx.config;
  const double eps = require_eps(c);
  const Vec u0 = start_field(c.start, ctx);
  SolutionRecord rec = newton_solve(u0, eps, c.a, ctx.op, newton_options(c));
  attach_diagnostics(rec, ctx.op, c.q, diag_tolerances(c, ctx.op), eigen_of(ctx).mu1);
  write_mesh_file((ctx.out / "mesh.txt").string(), ctx.op.mesh);
  write_field_file((ctx.out / "solution.field").string(), {rec.u, eps, c.a});
  emit(to_json(rec), ctx.out / "solution.json");
  return 0;
}

int cmd_sweep(const Overrides& ov) {
  Context ctx = prepare(ov);
  const auto& c = ctx.config;
  if (c.eps_grid.empty()) throw ValidationError("config must set a non-empty eps_grid for sweep");
  MultiStartOptions opts;
  opts.n_starts = c.n_starts;
  opts.seed = c.seed;
  opts.threads = c.threads;
  opts.newton = newton_options(c);
  opts.q = c.q;
  const SweepResult sweep = rigidity_sweep(c.eps_grid, c.a, ctx.op, opts);

  {
    std::ostringstream table, batch, suite;
    write_sweep_csv(table, sweep.rows);
    for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
      write_batch_csv(batch, sweep.rows[i].epsilon, sweep.runs[i], i == 0);
    }
    write_suite_csv(suite, sweep);
    write_text_file((ctx.out / "sweep.csv").string(), table.str());
    write_text_file((ctx.out / "starts.csv").string(), batch.str());
    write_text_file((ctx.out / "suite.csv").string(), suite.str());
  }
  Json j;
  j["a"] = c.a;
  j["mu1"] = sweep.mu1;
  j["eps_star_predicted"] = bifurcation_epsilon(c.a, sweep.mu1);
  j["empirical_threshold"] = sweep.empirical_threshold ? Json(*sweep.empirical_threshold) : Json(nullptr);
  j["threshold_uncertainty"] = sweep.threshold_uncertainty;
  j["M_emp"] = sweep.m_emp;
  j["threshold_of_M_emp"] = sweep.threshold_of_m_emp;
  j["consistent"] = !sweep.empirical_threshold || *sweep.empirical_threshold <= sweep.threshold_of_m_emp;
  bool suite_pass = true;
  for (const auto& run : sweep.runs) {
    for (const auto& rec : run.solutions) suite_pass = suite_pass && rec.diagnostics && rec.diagnostics->all_pass();
  }
  j["diagnostics_all_pass"] = suite_pass;
  j["multi_start_coverage"] = "heuristic";
  emit(j, ctx.out / "sweep.json");
  return 0;
}

std::vector<double> linspace(double from, double to, int steps) {
  std::vector<double> out;
  for (int i = 1; i <= steps; ++i) out.push_back(from + (to - from) * i / steps);
  return out;
}

int cmd_bifurcate(const Overrides& ov) {
  Context ctx = prepare(ov);
  const auto& c = ctx.config;
  const EigenPair pair = eigen_of(ctx);
  BifurcationReport report;
  report.a = c.a;
  report.mu1 = pair.mu1;
  report.degenerate = pair.degenerate;
  report.multiplicity = pair.multiplicity;
  report.eigenvector_choice = pair.degenerate ? "projection of the x coordinate onto the eigenspace"
                                              : "simple eigenvector, sign aligned with x";
  report.eps_star_predicted = bifurcation_epsilon(c.a, pair.mu1);
  const double lo = c.eps_lo.value_or(0.5 * report.eps_star_predicted);
  const double hi = c.eps_hi.value_or(1.5 * report.eps_star_predicted);
  report.eps_star_detected = detect_bifurcation(c.a, ctx.op, lo, hi, 1e-10 * report.eps_star_predicted);
  report.relative_gap =
      std::abs(report.eps_star_detected - report.eps_star_predicted) / report.eps_star_predicted;

  const double xi = find_xi(c.a);
  BranchSwitchOptions sw;
  sw.delta = c.delta;
  sw.newton = newton_options(c);
  report.switch_amplitude = c.amplitude * xi;
  report.switch_epsilon = (1.0 - c.delta) * report.eps_star_detected;
  const SolutionRecord start = branch_switch(report.eps_star_detected, c.a, ctx.op, report.switch_amplitude,
                                             pair.phi1, sw);
  report.branch = continue_branch(start, linspace(report.switch_epsilon, 0.5 * report.eps_star_detected,
                                                  c.branch_steps),
                                  ctx.op, sw.newton);
  report.closure = continue_branch(start, linspace(report.switch_epsilon, 1.1 * report.eps_star_detected, 4),
                                   ctx.op, sw.newton);
  {
    std::ostringstream branch, closure;
    write_branch_csv(branch, report.branch);
    write_branch_csv(closure, report.closure);
    write_text_file((ctx.out / "branch.csv").string(), branch.str());
    write_text_file((ctx.out / "closure.csv").string(), closure.str());
  }
  emit(to_json(report), ctx.out / "bifurcation.json");
  return 0;
}

int cmd_check(const Overrides& ov) {
  if (ov.field_path.empty()) throw ValidationError("check needs --field PATH");
  Context ctx = prepare(ov);
  const auto& c = ctx.config;
  const FieldFile field = read_field_file(ov.field_path);
  if (field.values.size() != ctx.op.size()) {
    throw ValidationError("field has " + std::to_string(field.values.size()) + " values but the mesh has " +
                          std::to_string(ctx.op.size()) + " nodes");
  }
  if (!(field.a > 1.0) || !(field.epsilon > 0.0)) {
    throw ValidationError("field header must carry epsilon > 0 and a > 1");
  }
  const DiagnosticsReport report = run_diagnostics(field.values, field.epsilon, field.a, c.q, ctx.op,
                                                   diag_tolerances(c, ctx.op), eigen_of(ctx).mu1);
  Json j = to_json(report);
  j["classification"] = classification_name(classify(field.values, ctx.op.lumped_mass));
  emit(j, ctx.out / "check.json");
  return report.all_pass() ? 0 : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Steady states and rigidity checks for -eps Lap(u) = e^u - 1 - a u (Neumann)"};
  app.require_subcommand(1);
  Overrides ov;
  auto add_common = [&ov](CLI::App* sub) {
    sub->add_option("--config", ov.config_path, "Experiment config (JSON)")->required();
    sub->add_option("--out", ov.out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", ov.seed, "Random seed (overrides seed)");
    sub->add_option("--threads", ov.threads, "Worker threads (overrides threads)");
  };
  auto* constants = app.add_subcommand("constants", "Constant chain, mu1 and thresholds as JSON");
  add_common(constants);
  constants->add_option("--M", ov.m_values, "Sup-norm bounds M for the threshold K(M)/mu1");
  auto* eigen = app.add_subcommand("eigen", "First nonzero Neumann eigenpair");
  add_common(eigen);
  auto* solve = app.add_subcommand("solve", "Single Newton solve with diagnostics");
  add_common(solve);
  solve->add_option("--start", ov.start, "const:0|const:xi|const:<v>|eig:<rel amp>|noise:<seed>|file:<path>");
  auto* sweep = app.add_subcommand("sweep", "Multi-start rigidity sweep over eps_grid");
  add_common(sweep);
  auto* bifurcate = app.add_subcommand("bifurcate", "Detect eps*, switch branch and continue");
  add_common(bifurcate);
  auto* check = app.add_subcommand("check", "Diagnostics for a stored solution field");
  add_common(check);
  check->add_option("--field", ov.field_path, "Solution field file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*constants) return cmd_constants(ov);
    if (*eigen) return cmd_eigen(ov);
    if (*solve) return cmd_solve(ov);
    if (*sweep) return cmd_sweep(ov);
    if (*bifurcate) return cmd_bifurcate(ov);
    if (*check) return cmd_check(ov);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what();
    if (!std::isnan(e.last_residual())) std::cerr << " (last residual " << e.last_residual() << ")";
    std::cerr << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
