#pragma once

// Damped Newton for the discrete steady state  eps A u = m o f(u),
// classification of solutions, and the multi-start search.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rigidity/diagnostics.hpp"
#include "rigidity/linalg.hpp"
#include "rigidity/mesh.hpp"

namespace rigidity {

struct Constant {
  double value;
};
struct Nonconstant {
  double sup_fluct;
};
using Classification = std::variant<Constant, Nonconstant>;

inline bool is_constant(const Classification& c) { return std::holds_alternative<Constant>(c); }

/// Relative threshold on sup |u - mean| separating round-off from patterns.
inline constexpr double kConstantThreshold = 1e-6;

/// Constant iff sup|u - mean| <= 1e-6 max(1, |mean|).
Classification classify(const Vec& u, const Vec& m);

struct ResidualEval {
  Vec r;
  bool overflow = false;
};

/// R = eps A u - m o f(u).
ResidualEval residual(const Vec& u, double eps, double a, const DiscreteOperator& op);

/// sqrt(sum r_i^2 / m_i): the L2 norm of the nodal residual density.
double residual_norm(const Vec& r, const Vec& m);

/// J = eps A - diag(m o f'(u)).
SparseSym jacobian(const Vec& u, double eps, double a, const DiscreteOperator& op);

struct NewtonOptions {
  double tol = -1.0;  // <= 0 selects 1e-10 (1 + |Omega|)
  int max_iter = 100;
  double min_step = 0x1p-24;
  /// Damping cap: steps are scaled so that sup|delta| <= max_step (<= 0 disables).
  double max_step = 2.0;
  /// Give up when the best residual has not dropped by 1% within this many
  /// iterations (<= 0 disables).
  int stall_iters = 12;

  double resolved_tol(const DiscreteOperator& op) const;
};

struct SolutionRecord {
  Vec u;
  double epsilon = 0.0;
  double a = 0.0;
  double residual_norm = 0.0;
  int newton_iters = 0;
  Classification classification = Constant{0.0};
  double mean = 0.0;        // mass-weighted
  double sup_fluct = 0.0;   // sup |u - mean|
  std::optional<DiagnosticsReport> diagnostics;
};

/// Fills classification, mean and sup_fluct from u.
void classify_record(SolutionRecord& record, const Vec& m);

/// Newton step delta solving J delta = -R by splitting delta into a constant
/// part c 1 and a mean-zero part: the mean-zero part comes from the bordered
/// (projected) system, c from the summed rows. Falls back to a direct solve
/// of J when the projected block is singular. Throws SingularJacobian.
Vec newton_step(const Vec& u, const Vec& r, double eps, double a, const DiscreteOperator& op);

/// Backtracking alpha in {1, 1/2, ...} until the residual norm decreases,
/// after capping sup|delta| at opts.max_step. Throws NoConvergence
/// (iteration cap, stall or step underflow) or SingularJacobian.
SolutionRecord newton_solve(const Vec& u0, double eps, double a, const DiscreteOperator& op,
                            const NewtonOptions& opts = {});

void attach_diagnostics(SolutionRecord& record, const DiscreteOperator& op, double q,
                        const DiagnosticsTolerances& tol, std::optional<double> mu1 = std::nullopt);

struct MultiStartOptions {
  int n_starts = 50;
  unsigned long seed = 1;
  int threads = 1;
  NewtonOptions newton;
  std::optional<Vec> phi1;  // bifurcating direction; computed when absent
  bool with_diagnostics = true;
  double q = 4.0;
};

/// Start family: constants {0, xi_a, log a}, then xi_a + s xi_a phi1 for
/// s in {+-0.1, +-0.5, +-1}, then seeded uniform noise in [-2, xi_a + 2].
std::vector<Vec> start_family(double a, const DiscreteOperator& op, int n_starts,
                              unsigned long seed, const Vec& phi1);

struct StartOutcome {
  int start_id = 0;
  bool converged = false;
  std::string failure;
  int solution_index = -1;  // into MultiStartResult::solutions
  std::optional<SolutionRecord> record;
};

struct MultiStartResult {
  std::vector<SolutionRecord> solutions;  // distinct, canonically ordered
  std::vector<StartOutcome> outcomes;     // one per start, in start order
};

/// Removes near-duplicates (sup|u - u'| <= 1e-5 (1 + sup|u|)) keeping the
/// first occurrence, then sorts canonically. `index_map[i]` receives the
/// output index of input i.
std::vector<SolutionRecord> deduplicate(const std::vector<SolutionRecord>& records, const Vec& m,
                                        std::vector<int>* index_map = nullptr);

MultiStartResult multi_start(double eps, double a, const DiscreteOperator& op,
                             const MultiStartOptions& opts);

MultiStartResult multi_start_from(const std::vector<Vec>& starts, double eps, double a,
                                  const DiscreteOperator& op, const MultiStartOptions& opts);

/// The x-aligned first nonzero Neumann eigenpair used for branch directions.
EigenPair first_mode(const DiscreteOperator& op, double tol = 1e-11);

}  // namespace rigidity
