#include "rigidity/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "rigidity/errors.hpp"
#include "rigidity/scalar_model.hpp"

namespace rigidity {

DiagnosticsTolerances DiagnosticsTolerances::from_newton_tol(double newton_tol) {
  DiagnosticsTolerances tol;
  tol.zero_average = 10.0 * newton_tol;
  tol.energy = 10.0 * newton_tol;
  tol.representation = 100.0 * newton_tol;
  return tol;
}

bool DiagnosticsReport::all_pass() const {
  return zero_avg_pass && l1_pass && mean_in_bounds && energy_pass && representation_pass &&
         poincare_pass.value_or(true);
}

namespace {

Vec f_of(const Vec& u, double a) {
  return u.unaryExpr([a](double t) { return eval_f(t, a); });
}

}  // namespace

CheckResult check_zero_average(const Vec& u, const Vec& m, double a, double tol) {
  const Vec f = f_of(u, a);
  const double residual = std::abs(m.dot(f));
  return {residual, residual <= tol * (1.0 + m.dot(f.cwiseAbs()))};
}

L1Check check_l1_bound(const Vec& u, const Vec& m, double a, double slack) {
  const double l1 = m.dot(f_of(u, a).cwiseAbs());
  const double bound = 2.0 * min_depth_c0(a) * m.sum();
  return {l1, bound, l1 <= bound * (1.0 + 1e-8) + slack};
}

CheckResult check_mean_bounds(const Vec& u, const Vec& m, double a, double tol) {
  const double mean = weighted_mean(u, m);
  return {mean, mean >= -tol && mean <= find_xi(a) + tol};
}

ExpIntegral check_exp_integrability(const Vec& u, const Vec& m, double q) {
  if (!(q > 2.0)) throw ValidationError("q must exceed 2");
  const Vec v = project_mean_zero(u, m);
  double integral = 0.0;
  bool overflow = false;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double exponent = q * std::abs(v[i]);
    if (exponent > kSaturationThreshold) {
      overflow = true;
      integral = std::numeric_limits<double>::max();
      break;
    }
    integral += m[i] * std::exp(exponent);
  }
  return {integral, m.sum(), overflow};
}

EnergyCheck check_energy_identity(const Vec& u, double eps, const DiscreteOperator& op, double a,
                                  double tol) {
  const Vec& m = op.lumped_mass;
  const double mean = weighted_mean(u, m);
  const Vec v = u.array() - mean;
  const double lhs = eps * v.dot(op.stiffness * v);
  const Vec df = f_of(u, a).array() - eval_f(mean, a);
  const double rhs = m.dot(df.cwiseProduct(v));
  return {lhs, rhs, std::abs(lhs - rhs) <= tol * (1.0 + std::abs(lhs))};
}

CheckResult check_poincare(const Vec& v, const Vec& m, const DiscreteOperator& op, double mu1) {
  const double mass_norm2 = m.dot(v.cwiseAbs2());
  if (!(mass_norm2 > 0.0)) throw NumericalError(NumericalFailure::kZeroField, "Poincare check on a zero field");
  const double ratio = v.dot(op.stiffness * v) / (mu1 * mass_norm2);
  return {ratio, ratio >= 1.0 - 1e-8};
}

CheckResult check_representation(const Vec& u, double eps, double a, const DiscreteOperator& op,
                                  double tol, double solve_tol) {
  const Vec& m = op.lumped_mass;
  const Vec v = project_mean_zero(u, m);
  const Vec load = m.cwiseProduct(f_of(u, a)) / eps;
  const Vec w = solve_projected(op.stiffness, m, load, solve_tol);
  const double sup_v = v.cwiseAbs().maxCoeff();
  const double error = (w - v).cwiseAbs().maxCoeff() / (1.0 + sup_v);
  return {error, error <= tol};
}

DiagnosticsReport run_diagnostics(const Vec& u, double eps, double a, double q,
                                  const DiscreteOperator& op, const DiagnosticsTolerances& tol,
                                  std::optional<double> mu1) {
  const Vec& m = op.lumped_mass;
  DiagnosticsReport report;
  const auto zero = check_zero_average(u, m, a, tol.zero_average);
  report.zero_avg_residual = zero.value;
  report.zero_avg_pass = zero.pass;
  const auto l1 = check_l1_bound(u, m, a, tol.bound_slack);
  report.l1_norm_f = l1.l1;
  report.l1_bound = l1.bound;
  report.l1_pass = l1.pass;
  const auto mean = check_mean_bounds(u, m, a, tol.bound_slack);
  report.mean_u = mean.value;
  report.mean_in_bounds = mean.pass;
  report.q = q;
  const auto expq = check_exp_integrability(u, m, q);
  report.exp_integral_q = expq.integral;
  report.exp_reference = expq.reference;
  report.exp_overflow = expq.overflow;
  const auto energy = check_energy_identity(u, eps, op, a, tol.energy);
  report.energy_lhs = energy.lhs;
  report.energy_rhs = energy.rhs;
  report.energy_pass = energy.pass;
  const auto rep = check_representation(u, eps, a, op, tol.representation, tol.solve_tol);
  report.representation_error = rep.value;
  report.representation_pass = rep.pass;
  report.sup_norm = u.cwiseAbs().maxCoeff();
  if (mu1) {
    const Vec v = project_mean_zero(u, m);
    if (v.cwiseAbs().maxCoeff() > 1e-6 * std::max(1.0, std::abs(report.mean_u))) {
      const auto poincare = check_poincare(v, m, op, *mu1);
      report.poincare_ratio = poincare.value;
      report.poincare_pass = poincare.pass;
    }
  }
  return report;
}

Vec green_column(const DiscreteOperator& op, int source, double solve_tol) {
  Vec delta = Vec::Zero(op.size());
  delta[source] = 1.0;
  return solve_projected(op.stiffness, op.lumped_mass, delta, solve_tol);
}

GreenEstimate estimate_green_constants(const DiscreteOperator& op, int sample_count, unsigned seed,
                                       double solve_tol) {
  if (sample_count < 1) throw ValidationError("sample_count must be >= 1");
  const Mesh& mesh = op.mesh;
  std::vector<char> interior(mesh.num_nodes(), 1);
  for (int b : mesh.boundary_nodes) interior[static_cast<std::size_t>(b)] = 0;

  double xmin = std::numeric_limits<double>::max(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const Point& p : mesh.nodes) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }

  GreenEstimate est;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(xmin, xmax), uy(ymin, ymax);
  for (int s = 0; s < sample_count; ++s) {
    const Point target{ux(rng), uy(rng)};
    int best = -1;
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      if (!interior[i]) continue;
      const double d = std::hypot(mesh.nodes[i].x - target.x, mesh.nodes[i].y - target.y);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) throw ValidationError("mesh has no interior nodes");
    if (std::find(est.sources.begin(), est.sources.end(), best) == est.sources.end()) {
      est.sources.push_back(best);
    }
  }

  const double d = op.diameter;
  const double exclusion = 2.0 * op.h;
  est.k_green_est = -std::numeric_limits<double>::infinity();
  for (int y : est.sources) {
    const Vec g = green_column(op, y, solve_tol);
    const Point& py = mesh.nodes[static_cast<std::size_t>(y)];
    double c2 = 0.0;
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
      const double dist = std::hypot(mesh.nodes[i].x - py.x, mesh.nodes[i].y - py.y);
      if (dist <= 0.0) continue;
      c2 += op.lumped_mass[static_cast<Eigen::Index>(i)] * d / dist;
      if (dist > exclusion) {
        const double regular = std::abs(g[static_cast<Eigen::Index>(i)]) - std::log(d / dist) / std::numbers::pi;
        est.k_green_est = std::max(est.k_green_est, regular);
      }
    }
    est.c2_est = std::max(est.c2_est, c2);
  }
  est.c2_bound = 2.0 * std::numbers::pi * d * d;
  est.cq_estimate = est.c2_est * std::exp(std::numbers::pi * est.k_green_est);
  return est;
}

}  // namespace rigidity
