#include "rigidity/newton.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <tuple>

#include <Eigen/SparseLU>

#include "parallel.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/scalar_model.hpp"

namespace rigidity {

Classification classify(const Vec& u, const Vec& m) {
  const double mean = weighted_mean(u, m);
  const double sup = (u.array() - mean).abs().maxCoeff();
  if (sup <= kConstantThreshold * std::max(1.0, std::abs(mean))) return Constant{mean};
  return Nonconstant{sup};
}

void classify_record(SolutionRecord& record, const Vec& m) {
  record.mean = weighted_mean(record.u, m);
  record.sup_fluct = (record.u.array() - record.mean).abs().maxCoeff();
  record.classification = classify(record.u, m);
}

ResidualEval residual(const Vec& u, double eps, double a, const DiscreteOperator& op) {
  if (u.size() != op.size()) throw ValidationError("residual: field length does not match operator");
  ResidualEval out;
  out.r = eps * (op.stiffness * u);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const SaturatedValue f = eval_f_checked(u[i], a);
    out.overflow = out.overflow || f.saturated;
    out.r[i] -= op.lumped_mass[i] * f.value;
  }
  return out;
}

double residual_norm(const Vec& r, const Vec& m) {
  return std::sqrt((r.array().square() / m.array()).sum());
}

namespace {

CsrMatrix jacobian_matrix(const Vec& u, double eps, double a, const DiscreteOperator& op) {
  CsrMatrix j = eps * op.stiffness.matrix();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    j.coeffRef(i, i) -= op.lumped_mass[i] * eval_f_prime(u[i], a);
  }
  return j;
}

Vec direct_step(const CsrMatrix& j, const Vec& r) {
  Eigen::SparseMatrix<double> col = j;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(col);
  if (lu.info() != Eigen::Success) {
    throw NumericalError(NumericalFailure::kSingularJacobian, "Jacobian factorization failed");
  }
  Vec delta = lu.solve(Vec(-r));
  if (!delta.allFinite()) {
    throw NumericalError(NumericalFailure::kSingularJacobian, "Jacobian solve produced non-finite values");
  }
  return delta;
}

}  // namespace

SparseSym jacobian(const Vec& u, double eps, double a, const DiscreteOperator& op) {
  if (u.size() != op.size()) throw ValidationError("jacobian: field length does not match operator");
  return SparseSym(jacobian_matrix(u, eps, a, op));
}

double NewtonOptions::resolved_tol(const DiscreteOperator& op) const {
  return tol > 0.0 ? tol : 1e-10 * (1.0 + op.area);
}

namespace {

// A singular mean equation (f'(u) = 0 on average) gives an unbounded c; its
// sign is kept and the damping cap limits the actual step.
Vec split_step(const CsrMatrix& j, const Vec& u, const Vec& r, double a, const DiscreteOperator& op,
               std::unique_ptr<BorderedSolver>& fluct) {
  const Vec& m = op.lumped_mass;
  const Vec d = m.cwiseProduct(u.unaryExpr([a](double t) { return eval_f_prime(t, a); }));
  if (fluct) {
    fluct->refactor(j);
  } else {
    fluct = std::make_unique<BorderedSolver>(j, m);
  }
  if (fluct->ok()) {
    try {
      const Vec w_r = fluct->solve(-r);
      const Vec w_d = fluct->solve(d);
      // Summed rows of J (c 1 + w) = -R, using 1^T A = 0.
      const double num = r.sum() - d.dot(w_r);
      double denom = d.sum() + d.dot(w_d);
      const double scale = d.cwiseAbs().sum() + std::abs(d.dot(w_d)) + m.sum();
      if (std::abs(denom) <= 1e-14 * scale) denom = std::copysign(1e-14 * scale, denom);
      const double c = num / denom;
      Vec delta = w_r + c * w_d;
      delta.array() += c;
      if (delta.allFinite()) return delta;
    } catch (const NumericalError&) {
    }
  }
  return direct_step(j, r);
}

}  // namespace

Vec newton_step(const Vec& u, const Vec& r, double eps, double a, const DiscreteOperator& op) {
  std::unique_ptr<BorderedSolver> fluct;
  return split_step(jacobian_matrix(u, eps, a, op), u, r, a, op, fluct);
}

SolutionRecord newton_solve(const Vec& u0, double eps, double a, const DiscreteOperator& op,
                            const NewtonOptions& opts) {
  if (!(eps > 0.0)) throw ValidationError("epsilon must be positive");
  if (!(a > 1.0)) throw ValidationError("a must exceed 1");
  if (u0.size() != op.size()) throw ValidationError("start field length does not match operator");
  const double tol = opts.resolved_tol(op);
  const Vec& m = op.lumped_mass;

  Vec u = u0;
  ResidualEval eval = residual(u, eps, a, op);
  if (eval.overflow || !u.allFinite()) {
    throw NumericalError(NumericalFailure::kOverflow, "start field overflows the nonlinearity");
  }
  double norm = residual_norm(eval.r, m);
  std::unique_ptr<BorderedSolver> fluct;
  double best = norm;
  int best_iter = 0;
  for (int iter = 0;; ++iter) {
    if (norm <= tol) {
      SolutionRecord rec;
      rec.u = std::move(u);
      rec.epsilon = eps;
      rec.a = a;
      rec.residual_norm = norm;
      rec.newton_iters = iter;
      classify_record(rec, m);
      return rec;
    }
    if (iter >= opts.max_iter) {
      throw NumericalError(NumericalFailure::kNoConvergence,
                           "Newton iteration cap " + std::to_string(opts.max_iter) + " reached", norm);
    }
    if (norm < 0.99 * best) {
      best = norm;
      best_iter = iter;
    } else if (opts.stall_iters > 0 && iter - best_iter >= opts.stall_iters) {
      throw NumericalError(NumericalFailure::kNoConvergence,
                           "Newton stalled for " + std::to_string(opts.stall_iters) + " iterations", norm);
    }
    Vec delta = split_step(jacobian_matrix(u, eps, a, op), u, eval.r, a, op, fluct);
    const double sup = delta.cwiseAbs().maxCoeff();
    if (opts.max_step > 0.0 && sup > opts.max_step) delta *= opts.max_step / sup;
    double alpha = 1.0;
    while (true) {
      Vec trial = u + alpha * delta;
      ResidualEval trial_eval = residual(trial, eps, a, op);
      const double trial_norm = trial_eval.overflow ? std::numeric_limits<double>::infinity()
                                                    : residual_norm(trial_eval.r, m);
      if (trial_norm < norm) {
        u = std::move(trial);
        eval = std::move(trial_eval);
        norm = trial_norm;
        break;
      }
      alpha *= 0.5;
      if (alpha < opts.min_step) {
        throw NumericalError(NumericalFailure::kNoConvergence, "line search step underflow", norm);
      }
    }
  }
}

void attach_diagnostics(SolutionRecord& record, const DiscreteOperator& op, double q,
                        const DiagnosticsTolerances& tol, std::optional<double> mu1) {
  record.diagnostics = run_diagnostics(record.u, record.epsilon, record.a, q, op, tol, mu1);
}

std::vector<Vec> start_family(double a, const DiscreteOperator& op, int n_starts,
                              unsigned long seed, const Vec& phi1) {
  if (n_starts < 1) throw ValidationError("n_starts must be >= 1");
  const Eigen::Index n = op.size();
  const double xi = find_xi(a);
  std::vector<Vec> starts;
  starts.reserve(static_cast<std::size_t>(n_starts));
  auto add = [&](Vec v) {
    if (static_cast<int>(starts.size()) < n_starts) starts.push_back(std::move(v));
  };
  add(Vec::Zero(n));
  add(Vec::Constant(n, xi));
  add(Vec::Constant(n, std::log(a)));
  for (double s : {0.1, -0.1, 0.5, -0.5, 1.0, -1.0}) add((xi + s * xi * phi1.array()).matrix());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-2.0, xi + 2.0);
  while (static_cast<int>(starts.size()) < n_starts) {
    starts.push_back(Vec::NullaryExpr(n, [&] { return noise(rng); }));
  }
  return starts;
}

std::vector<SolutionRecord> deduplicate(const std::vector<SolutionRecord>& records, const Vec& m,
                                        std::vector<int>* index_map) {
  std::vector<SolutionRecord> distinct;
  std::vector<int> map(records.size(), -1);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Vec& u = records[i].u;
    for (std::size_t k = 0; k < distinct.size(); ++k) {
      const double tol = 1e-5 * (1.0 + distinct[k].u.cwiseAbs().maxCoeff());
      if ((u - distinct[k].u).cwiseAbs().maxCoeff() <= tol) {
        map[i] = static_cast<int>(k);
        break;
      }
    }
    if (map[i] < 0) {
      map[i] = static_cast<int>(distinct.size());
      distinct.push_back(records[i]);
    }
  }
  // Canonical order: mean, fluctuation size, then a few moments of the field.
  std::vector<std::size_t> order(distinct.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  auto key = [&](std::size_t k) {
    const Vec& u = distinct[k].u;
    const double mean = weighted_mean(u, m);
    const double sup = (u.array() - mean).abs().maxCoeff();
    // Quantize so that near-duplicates compare equal and fall through.
    auto q = [](double x) { return std::round(x * 1e6); };
    const Eigen::Index first = 0, last = u.size() - 1, mid = u.size() / 2;
    return std::make_tuple(q(mean), q(sup), q(u[first]), q(u[last]), q(u[mid]));
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return key(x) < key(y); });
  std::vector<SolutionRecord> sorted;
  std::vector<int> position(order.size());
  sorted.reserve(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    position[order[k]] = static_cast<int>(k);
    sorted.push_back(std::move(distinct[order[k]]));
  }
  if (index_map) {
    index_map->resize(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) (*index_map)[i] = position[static_cast<std::size_t>(map[i])];
  }
  return sorted;
}

EigenPair first_mode(const DiscreteOperator& op, double tol) {
  EigenOptions eig;
  eig.tol = tol;
  eig.preferred_direction = op.mesh.x_coordinates();
  eig.start_vectors = {op.mesh.x_coordinates(), op.mesh.y_coordinates()};
  return smallest_nonzero_eigen(op.stiffness, op.lumped_mass, eig);
}

MultiStartResult multi_start_from(const std::vector<Vec>& starts, double eps, double a,
                                  const DiscreteOperator& op, const MultiStartOptions& opts) {
  const int count = static_cast<int>(starts.size());
  std::vector<StartOutcome> outcomes(static_cast<std::size_t>(count));
  detail::parallel_for(count, opts.threads, [&](int i) {
    StartOutcome& out = outcomes[static_cast<std::size_t>(i)];
    out.start_id = i;
    try {
      out.record = newton_solve(starts[static_cast<std::size_t>(i)], eps, a, op, opts.newton);
      out.converged = true;
    } catch (const NumericalError& e) {
      out.failure = e.what();
    }
  });

  std::vector<SolutionRecord> converged;
  std::vector<int> owner;
  for (auto& out : outcomes) {
    if (out.converged) {
      converged.push_back(*out.record);
      owner.push_back(out.start_id);
    }
  }
  std::vector<int> index_map;
  MultiStartResult result;
  result.solutions = deduplicate(converged, op.lumped_mass, &index_map);
  for (std::size_t k = 0; k < owner.size(); ++k) {
    outcomes[static_cast<std::size_t>(owner[k])].solution_index = index_map[k];
  }
  if (opts.with_diagnostics) {
    const auto tol = DiagnosticsTolerances::from_newton_tol(opts.newton.resolved_tol(op));
    for (auto& rec : result.solutions) attach_diagnostics(rec, op, opts.q, tol);
  }
  result.outcomes = std::move(outcomes);
  return result;
}

MultiStartResult multi_start(double eps, double a, const DiscreteOperator& op, const MultiStartOptions& opts) {
  const Vec phi1 = opts.phi1 ? *opts.phi1 : first_mode(op).phi1;
  return multi_start_from(start_family(a, op, opts.n_starts, opts.seed, phi1), eps, a, op, opts);
}

}  // namespace rigidity
