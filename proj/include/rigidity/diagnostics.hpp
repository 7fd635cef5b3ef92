#pragma once

// Checks of the a priori estimates on computed fields: zero average of f(u),
// the L1 bound, the mean bounds, exponential integrability of the
// fluctuation, the energy identity, the Poincare inequality and the Green
// representation of the fluctuation.

#include <optional>

#include "rigidity/linalg.hpp"
#include "rigidity/mesh.hpp"

namespace rigidity {

struct DiagnosticsTolerances {
  double zero_average = 2e-9;     // 10 x default Newton tol on the unit square
  double energy = 2e-9;
  double representation = 2e-8;
  double bound_slack = 1e-6;      // absolute slack for L1 and mean bounds
  double solve_tol = 1e-13;       // CG tolerance of the representation solve

  /// The defaults scaled from a Newton tolerance: 10x, 10x, 100x.
  static DiagnosticsTolerances from_newton_tol(double newton_tol);
};

struct DiagnosticsReport {
  double zero_avg_residual = 0.0;
  bool zero_avg_pass = false;
  double l1_norm_f = 0.0;
  double l1_bound = 0.0;
  bool l1_pass = false;
  double mean_u = 0.0;
  bool mean_in_bounds = false;
  double q = 0.0;
  double exp_integral_q = 0.0;
  double exp_reference = 0.0;  // |Omega|: the value at v = 0
  bool exp_overflow = false;
  double energy_lhs = 0.0;
  double energy_rhs = 0.0;
  bool energy_pass = false;
  std::optional<double> poincare_ratio;  // absent for constant fields or unknown mu1
  std::optional<bool> poincare_pass;
  double representation_error = 0.0;
  bool representation_pass = false;
  double sup_norm = 0.0;

  /// Zero average, L1, mean, energy and representation checks (and Poincare
  /// when present) all pass.
  bool all_pass() const;
};

struct CheckResult {
  double value;
  bool pass;
};

CheckResult check_zero_average(const Vec& u, const Vec& m, double a, double tol);

struct L1Check {
  double l1;
  double bound;
  bool pass;
};
L1Check check_l1_bound(const Vec& u, const Vec& m, double a, double slack = 1e-6);

CheckResult check_mean_bounds(const Vec& u, const Vec& m, double a, double tol = 1e-6);

struct ExpIntegral {
  double integral;
  double reference;
  bool overflow;
};
ExpIntegral check_exp_integrability(const Vec& u, const Vec& m, double q);

struct EnergyCheck {
  double lhs;
  double rhs;
  bool pass;
};
EnergyCheck check_energy_identity(const Vec& u, double eps, const DiscreteOperator& op, double a,
                                  double tol);

/// ratio = v^T A v / (mu1 sum m v^2); throws ZeroField for v = 0.
CheckResult check_poincare(const Vec& v, const Vec& m, const DiscreteOperator& op, double mu1);

/// Compares v = u - mean(u) with the discrete Neumann Green action on f(u)/eps.
CheckResult check_representation(const Vec& u, double eps, double a, const DiscreteOperator& op,
                                 double tol, double solve_tol = 1e-13);

DiagnosticsReport run_diagnostics(const Vec& u, double eps, double a, double q,
                                  const DiscreteOperator& op, const DiagnosticsTolerances& tol,
                                  std::optional<double> mu1 = std::nullopt);

struct GreenEstimate {
  double k_green_est = 0.0;
  double c2_est = 0.0;
  double c2_bound = 0.0;       // 2 pi D^2
  /// C2 e^{pi K}: numerical estimate, not a certified constant.
  double cq_estimate = 0.0;
  std::vector<int> sources;
};

/// Discrete Green columns for sampled interior source nodes (seeded uniform
/// points snapped to the nearest interior node). K is estimated from nodes
/// farther than 2h from the source; C2 from all other nodes.
GreenEstimate estimate_green_constants(const DiscreteOperator& op, int sample_count, unsigned seed,
                                       double solve_tol = 1e-12);

/// Discrete Green column G(., y) for source node y (mean zero).
Vec green_column(const DiscreteOperator& op, int source, double solve_tol = 1e-12);

}  // namespace rigidity
