#pragma once

// Stability of the constant branch u = xi_a, detection of the primary
// bifurcation, branch switching, natural continuation and the rigidity sweep.

#include <optional>
#include <string>
#include <vector>

#include "rigidity/newton.hpp"

namespace rigidity {

struct BranchPoint {
  double epsilon = 0.0;
  SolutionRecord solution;
  double stability_indicator = 0.0;
};

/// Smallest eigenvalue of the pencil (J(u), M) restricted to the mean-zero
/// subspace, J = eps A - diag(m o f'(u)). At u = xi_a this is eps mu_1 - f'(xi_a).
double stability_indicator(const Vec& u, double eps, double a, const DiscreteOperator& op,
                           double tol = 1e-12);

/// Indicator along u = xi_a for each eps (grid sorted decreasing).
std::vector<BranchPoint> trivial_branch_stability(const std::vector<double>& eps_grid, double a,
                                                  const DiscreteOperator& op);

/// Bisection on the indicator at u = xi_a; returns the midpoint of a final
/// bracket of width <= tol. Throws InvalidBracket when the end signs agree.
double detect_bifurcation(double a, const DiscreteOperator& op, double eps_lo, double eps_hi,
                          double tol = 1e-10);

struct BranchSwitchOptions {
  double delta = 0.05;  // solve at (1 - delta) eps_star
  NewtonOptions newton;
};

/// Newton from xi_a + amplitude phi1 just below eps_star. If that lands on a
/// constant, retries once from the same field shifted so that sum m f(u) = 0.
/// Throws FellBackToConstant when both land on a constant, NoConvergence otherwise.
SolutionRecord branch_switch(double eps_star, double a, const DiscreteOperator& op, double amplitude,
                             const Vec& phi1, const BranchSwitchOptions& opts = {});

/// Natural continuation warm-started from the previous point, halving the
/// parameter step on failure (at most max_halvings times per target).
std::vector<BranchPoint> continue_branch(const SolutionRecord& start, const std::vector<double>& eps_schedule,
                                         const DiscreteOperator& op, const NewtonOptions& opts = {},
                                         int max_halvings = 6);

struct BifurcationReport {
  double a = 0.0;
  double mu1 = 0.0;
  bool degenerate = false;
  int multiplicity = 1;
  std::string eigenvector_choice;
  double eps_star_detected = 0.0;
  double eps_star_predicted = 0.0;
  double relative_gap = 0.0;
  double switch_epsilon = 0.0;
  double switch_amplitude = 0.0;
  std::vector<BranchPoint> branch;   // nonconstant side, decreasing eps
  std::vector<BranchPoint> closure;  // continuation upward past eps_star
};

struct SweepRow {
  double epsilon = 0.0;
  int n_distinct = 0;
  bool any_nonconstant = false;
  int n_converged = 0;
  int n_failed = 0;
  double max_sup_norm = 0.0;
  double max_exp_integral = 0.0;  // over distinct solutions
};

struct SweepResult {
  std::vector<SweepRow> rows;            // in grid order
  std::vector<MultiStartResult> runs;    // parallel to rows
  std::optional<double> empirical_threshold;
  double threshold_uncertainty = 0.0;    // grid spacing below the threshold
  double mu1 = 0.0;
  double m_emp = 0.0;                    // max sup norm over all solutions
  double threshold_of_m_emp = 0.0;       // K(M_emp) / mu1
};

/// Multi-start Newton at each grid eps. The empirical rigidity threshold is
/// the smallest grid eps above which no nonconstant solution was found.
SweepResult rigidity_sweep(const std::vector<double>& eps_grid, double a, const DiscreteOperator& op,
                           const MultiStartOptions& opts);

/// Empirical threshold of a finished table (rows in any order).
std::optional<double> empirical_threshold(const std::vector<SweepRow>& rows, double* spacing = nullptr);

}  // namespace rigidity
