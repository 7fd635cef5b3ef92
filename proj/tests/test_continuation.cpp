#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "rigidity/continuation.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/scalar_model.hpp"

using namespace rigidity;

namespace {

struct Fixture {
  DiscreteOperator op = assemble(build_rectangle_mesh(32, 32, 1.0, 1.0));
  EigenPair mode = first_mode(op);
  double fprime = eval_f_prime(find_xi(2.0), 2.0);
  double predicted = fprime / mode.mu1;
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_CASE("stability indicator at xi is eps mu1 - f'(xi)") {
  const auto& f = fx();
  const Vec u = Vec::Constant(f.op.size(), find_xi(2.0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(0.05, 1.0);
  for (int k = 0; k < 10; ++k) {
    const double eps = dist(rng);
    const double expected = eps * f.mode.mu1 - f.fprime;
    CHECK(stability_indicator(u, eps, 2.0, f.op) == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("trivial branch changes sign at the predicted value") {
  const auto& f = fx();
  const auto pts = trivial_branch_stability({2 * f.predicted, f.predicted}, 2.0, f.op);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].stability_indicator > 0.0);
  CHECK(std::abs(pts[1].stability_indicator) <= 1e-6 * f.fprime);
  CHECK(is_constant(pts[0].solution.classification));
  CHECK_THROWS_AS(trivial_branch_stability({0.1, 0.2}, 2.0, f.op), ValidationError);
}

TEST_CASE("bisection closes the loop with the eigensolver") {
  const auto& f = fx();
  const double detected = detect_bifurcation(2.0, f.op, 0.10, 0.20);
  CHECK(detected * f.mode.mu1 == doctest::Approx(f.fprime).epsilon(1e-8));
  CHECK(std::abs(detected - 0.153285) / 0.153285 < 0.02);
  try {
    detect_bifurcation(2.0, f.op, 0.2, 0.3);
    FAIL("expected InvalidBracket");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == NumericalFailure::kInvalidBracket);
  }
  CHECK_THROWS_AS(detect_bifurcation(2.0, f.op, 0.3, 0.2), NumericalError);
}

TEST_CASE("detected value moves toward the continuum value under refinement") {
  double prev = 1e9;
  for (int n : {8, 16, 32}) {
    const auto op = assemble(build_rectangle_mesh(n, n, 1.0, 1.0));
    const double gap = std::abs(detect_bifurcation(2.0, op, 0.10, 0.20, 1e-9) - 0.153285);
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("branch switch and pitchfork equivariance") {
  const auto& f = fx();
  const double xi = find_xi(2.0);
  const SolutionRecord plus = branch_switch(f.predicted, 2.0, f.op, 0.3 * xi, f.mode.phi1);
  const SolutionRecord minus = branch_switch(f.predicted, 2.0, f.op, -0.3 * xi, f.mode.phi1);
  CHECK(plus.sup_fluct > 0.01);
  CHECK(plus.epsilon == doctest::Approx(0.95 * f.predicted));
  std::map<std::pair<long, long>, int> index;
  auto key = [](double x, double y) { return std::make_pair(std::lround(x * 1e9), std::lround(y * 1e9)); };
  for (std::size_t i = 0; i < f.op.mesh.num_nodes(); ++i) index[key(f.op.mesh.nodes[i].x, f.op.mesh.nodes[i].y)] = static_cast<int>(i);
  double worst = 0.0;
  for (std::size_t i = 0; i < f.op.mesh.num_nodes(); ++i) {
    const Point p = f.op.mesh.nodes[i];
    worst = std::max(worst, std::abs(plus.u[static_cast<Eigen::Index>(i)] - minus.u[index.at(key(1.0 - p.x, p.y))]));
  }
  CHECK(worst < 1e-6);

  try {
    branch_switch(f.predicted, 2.0, f.op, 1e-9, f.mode.phi1);
    FAIL("expected FellBackToConstant");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == NumericalFailure::kFellBackToConstant);
  }
  CHECK_THROWS_AS(branch_switch(f.predicted, 2.0, f.op, 0.0, f.mode.phi1), ValidationError);
}

TEST_CASE("continuation grows the pattern downward and closes upward") {
  const auto& f = fx();
  const SolutionRecord start = branch_switch(f.predicted, 2.0, f.op, 0.3 * find_xi(2.0), f.mode.phi1);
  std::vector<double> down;
  for (int k = 1; k <= 5; ++k) down.push_back(start.epsilon - k * (start.epsilon - 0.5 * f.predicted) / 5);
  const auto branch = continue_branch(start, down, f.op);
  REQUIRE(branch.size() == down.size());
  double prev = start.sup_fluct;
  for (const auto& pt : branch) {
    CHECK(pt.solution.sup_fluct > prev);
    prev = pt.solution.sup_fluct;
    CHECK_FALSE(is_constant(pt.solution.classification));
    const auto rep = run_diagnostics(pt.solution.u, pt.epsilon, 2.0, 4.0, f.op,
                                     DiagnosticsTolerances::from_newton_tol(NewtonOptions{}.resolved_tol(f.op)));
    CHECK(rep.all_pass());
  }
  const auto up = continue_branch(start, {f.predicted * 1.02, f.predicted * 1.1}, f.op);
  REQUIRE(up.size() == 2);
  CHECK(up.back().solution.sup_fluct < 1e-6);
  CHECK(is_constant(up.back().solution.classification));
  CHECK(continue_branch(start, {}, f.op).empty());
}

TEST_CASE("empirical threshold on a synthetic table") {
  std::vector<SweepRow> rows(5);
  const double eps[] = {0.1, 0.2, 0.3, 0.4, 0.5};
  const bool nonconst[] = {true, false, true, false, false};
  for (int i = 0; i < 5; ++i) {
    rows[static_cast<std::size_t>(i)].epsilon = eps[i];
    rows[static_cast<std::size_t>(i)].any_nonconstant = nonconst[i];
  }
  double spacing = 0.0;
  const auto t = empirical_threshold(rows, &spacing);
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(0.4));
  CHECK(spacing == doctest::Approx(0.1));
  rows.back().any_nonconstant = true;
  CHECK_FALSE(empirical_threshold(rows).has_value());
}

TEST_CASE("sweep deep in the rigidity regime") {
  const auto op = assemble(build_rectangle_mesh(16, 16, 1.0, 1.0));
  MultiStartOptions opts;
  opts.n_starts = 15;
  const SweepResult a = rigidity_sweep({10.0}, 2.0, op, opts);
  REQUIRE(a.rows.size() == 1);
  CHECK_FALSE(a.rows[0].any_nonconstant);
  CHECK(a.rows[0].n_distinct == 2);
  CHECK(a.empirical_threshold == doctest::Approx(10.0));
  const SweepResult b = rigidity_sweep({10.0}, 2.0, op, opts);
  CHECK(b.rows[0].n_converged == a.rows[0].n_converged);
  CHECK(a.threshold_of_m_emp == doctest::Approx(lipschitz_k(a.m_emp, 2.0) / a.mu1));
  CHECK_THROWS_AS(rigidity_sweep({}, 2.0, op, opts), ValidationError);
}
