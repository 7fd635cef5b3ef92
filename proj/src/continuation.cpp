#include "rigidity/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "rigidity/errors.hpp"
#include "rigidity/scalar_model.hpp"

namespace rigidity {

double stability_indicator(const Vec& u, double eps, double a, const DiscreteOperator& op, double tol) {
  const Vec& m = op.lumped_mass;
  const Vec fp = u.unaryExpr([a](double t) { return eval_f_prime(t, a); });
  // Shift by max f' so that K = J + shift M is positive definite on the subspace.
  const double shift = fp.maxCoeff();
  CsrMatrix k = eps * op.stiffness.matrix();
  for (Eigen::Index i = 0; i < u.size(); ++i) k.coeffRef(i, i) += m[i] * (shift - fp[i]);

  BorderedSolver solver(k, m);
  if (!solver.ok()) {
    throw NumericalError(NumericalFailure::kSingularJacobian, "shifted Jacobian factorization failed");
  }
  EigenOptions opts;
  opts.tol = tol;
  opts.block = 3;
  opts.start_vectors = {op.mesh.x_coordinates(), op.mesh.y_coordinates()};
  auto apply = [&k](const Vec& x) -> Vec { return k * x; };
  auto inverse = [&](const Vec& x) -> Vec { return solver.solve(m.cwiseProduct(x)); };
  const SubspaceResult sub = subspace_inverse_iteration(apply, inverse, m, opts, 1);
  return sub.values[0] - shift;
}

std::vector<BranchPoint> trivial_branch_stability(const std::vector<double>& eps_grid, double a,
                                                  const DiscreteOperator& op) {
  if (!std::is_sorted(eps_grid.rbegin(), eps_grid.rend())) {
    throw ValidationError("eps grid must be sorted decreasing");
  }
  const double xi = find_xi(a);
  std::vector<BranchPoint> points;
  points.reserve(eps_grid.size());
  for (double eps : eps_grid) {
    BranchPoint pt;
    pt.epsilon = eps;
    pt.solution.u = Vec::Constant(op.size(), xi);
    pt.solution.epsilon = eps;
    pt.solution.a = a;
    pt.solution.residual_norm = residual_norm(residual(pt.solution.u, eps, a, op).r, op.lumped_mass);
    classify_record(pt.solution, op.lumped_mass);
    pt.stability_indicator = stability_indicator(pt.solution.u, eps, a, op);
    points.push_back(std::move(pt));
  }
  return points;
}

double detect_bifurcation(double a, const DiscreteOperator& op, double eps_lo, double eps_hi, double tol) {
  if (!(eps_lo > 0.0) || !(eps_hi > eps_lo)) {
    throw NumericalError(NumericalFailure::kInvalidBracket, "bracket must satisfy 0 < eps_lo < eps_hi");
  }
  const Vec u = Vec::Constant(op.size(), find_xi(a));
  double lo_val = stability_indicator(u, eps_lo, a, op);
  const double hi_val = stability_indicator(u, eps_hi, a, op);
  if ((lo_val > 0.0) == (hi_val > 0.0)) {
    throw NumericalError(NumericalFailure::kInvalidBracket,
                         "stability indicator has the same sign at both bracket ends");
  }
  double lo = eps_lo, hi = eps_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double val = stability_indicator(u, mid, a, op);
    if ((val > 0.0) == (lo_val > 0.0)) {
      lo = mid;
      lo_val = val;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

// Constant shift c with sum m f(u + c) = 0, the zero-average identity every
// solution satisfies. g(c) = sum m f(u + c) is convex, so Newton from c = 0
// with g(0) > 0 and g'(0) > 0 decreases monotonically to the larger root.
std::optional<double> zero_average_shift(const Vec& u, const Vec& m, double a) {
  double c = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    double g = 0.0, dg = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      g += m[i] * eval_f(u[i] + c, a);
      dg += m[i] * eval_f_prime(u[i] + c, a);
    }
    if (!(dg > 0.0) || !std::isfinite(g)) return std::nullopt;
    const double step = g / dg;
    c -= step;
    if (std::abs(step) <= 1e-14 * (1.0 + std::abs(c))) return c;
  }
  return std::nullopt;
}

}  // namespace

SolutionRecord branch_switch(double eps_star, double a, const DiscreteOperator& op, double amplitude,
                             const Vec& phi1, const BranchSwitchOptions& opts) {
  if (amplitude == 0.0) throw ValidationError("branch switch amplitude must be nonzero");
  const double eps = (1.0 - opts.delta) * eps_star;
  const Vec u0 = (find_xi(a) + amplitude * phi1.array()).matrix();
  std::optional<NumericalError> failure;
  double last_residual = 0.0;
  try {
    SolutionRecord rec = newton_solve(u0, eps, a, op, opts.newton);
    if (!is_constant(rec.classification)) return rec;
    last_residual = rec.residual_norm;
  } catch (const NumericalError& e) {
    failure = e;
  }
  // Retry with the mean lowered onto the zero-average manifold.
  if (const auto shift = zero_average_shift(u0, op.lumped_mass, a); shift && *shift != 0.0) {
    try {
      SolutionRecord retry = newton_solve((u0.array() + *shift).matrix(), eps, a, op, opts.newton);
      if (!is_constant(retry.classification)) return retry;
      last_residual = retry.residual_norm;
      failure.reset();
    } catch (const NumericalError&) {
    }
  }
  if (failure) throw *failure;
  throw NumericalError(NumericalFailure::kFellBackToConstant,
                       "Newton returned to a constant state; increase amplitude or delta", last_residual);
}

std::vector<BranchPoint> continue_branch(const SolutionRecord& start, const std::vector<double>& eps_schedule,
                                         const DiscreteOperator& op, const NewtonOptions& opts,
                                         int max_halvings) {
  const double tol = opts.resolved_tol(op);
  if (!(start.residual_norm <= tol)) throw ValidationError("continuation start is not converged");
  std::vector<BranchPoint> points;
  SolutionRecord current = start;
  for (double target : eps_schedule) {
    double step = target - current.epsilon;
    int halvings = 0;
    while (current.epsilon != target) {
      const double remaining = target - current.epsilon;
      const double trial_eps = std::abs(step) >= std::abs(remaining) ? target : current.epsilon + step;
      try {
        current = newton_solve(current.u, trial_eps, current.a, op, opts);
      } catch (const NumericalError& e) {
        if (++halvings > max_halvings) {
          throw NumericalError(NumericalFailure::kBranchLost,
                               "continuation step underflow near eps = " + std::to_string(current.epsilon) +
                                   " (" + e.what() + ")",
                               e.last_residual());
        }
        step *= 0.5;
      }
    }
    BranchPoint pt;
    pt.epsilon = target;
    pt.stability_indicator = stability_indicator(current.u, target, current.a, op);
    pt.solution = current;
    points.push_back(std::move(pt));
  }
  return points;
}

std::optional<double> empirical_threshold(const std::vector<SweepRow>& rows, double* spacing) {
  std::vector<SweepRow> sorted = rows;
  std::sort(sorted.begin(), sorted.end(), [](const SweepRow& x, const SweepRow& y) { return x.epsilon < y.epsilon; });
  std::optional<double> threshold;
  double gap = 0.0;
  for (std::size_t i = sorted.size(); i-- > 0;) {
    if (sorted[i].any_nonconstant) break;
    threshold = sorted[i].epsilon;
    gap = i > 0 ? sorted[i].epsilon - sorted[i - 1].epsilon : 0.0;
  }
  if (spacing) *spacing = gap;
  return threshold;
}

SweepResult rigidity_sweep(const std::vector<double>& eps_grid, double a, const DiscreteOperator& op,
                           const MultiStartOptions& opts) {
  if (eps_grid.empty()) throw ValidationError("eps grid must not be empty");
  MultiStartOptions local = opts;
  const EigenPair mode = first_mode(op);
  if (!local.phi1) local.phi1 = mode.phi1;

  SweepResult result;
  result.mu1 = mode.mu1;
  for (double eps : eps_grid) {
    MultiStartResult run = multi_start(eps, a, op, local);
    SweepRow row;
    row.epsilon = eps;
    row.n_distinct = static_cast<int>(run.solutions.size());
    for (const auto& out : run.outcomes) {
      if (out.converged) {
        ++row.n_converged;
      } else {
        ++row.n_failed;
      }
    }
    for (const auto& rec : run.solutions) {
      row.any_nonconstant = row.any_nonconstant || !is_constant(rec.classification);
      row.max_sup_norm = std::max(row.max_sup_norm, rec.u.cwiseAbs().maxCoeff());
      row.max_exp_integral =
          std::max(row.max_exp_integral, check_exp_integrability(rec.u, op.lumped_mass, local.q).integral);
    }
    result.m_emp = std::max(result.m_emp, row.max_sup_norm);
    result.rows.push_back(row);
    result.runs.push_back(std::move(run));
  }
  result.empirical_threshold = empirical_threshold(result.rows, &result.threshold_uncertainty);
  result.threshold_of_m_emp = lipschitz_k(result.m_emp, a) / result.mu1;
  return result;
}

}  // namespace rigidity
