#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "rigidity/diagnostics.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/newton.hpp"
#include "rigidity/scalar_model.hpp"

using namespace rigidity;

namespace {

const DiscreteOperator& square32() {
  static const DiscreteOperator op = assemble(build_rectangle_mesh(32, 32, 1.0, 1.0));
  return op;
}

SolutionRecord pattern_solution() {
  const auto& op = square32();
  Vec u0(op.size());
  for (Eigen::Index i = 0; i < op.size(); ++i) {
    u0[i] = find_xi(2.0) + 0.35 * std::cos(M_PI * op.mesh.nodes[static_cast<std::size_t>(i)].x);
  }
  return newton_solve(u0, 0.14, 2.0, op);
}

int node_at(const Mesh& mesh, double x, double y) {
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    if (std::abs(mesh.nodes[i].x - x) < 1e-12 && std::abs(mesh.nodes[i].y - y) < 1e-12) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

TEST_CASE("constant roots pass every identity") {
  const auto& op = square32();
  for (double c : {0.0, find_xi(2.0)}) {
    const auto rep = run_diagnostics(Vec::Constant(op.size(), c), 0.8, 2.0, 4.0, op, {}, 9.87);
    CHECK(rep.all_pass());
    CHECK(rep.exp_integral_q == doctest::Approx(op.area).epsilon(1e-12));
    CHECK_FALSE(rep.poincare_ratio.has_value());
  }
}

TEST_CASE("a converged pattern passes the full suite") {
  const auto& op = square32();
  const SolutionRecord r = pattern_solution();
  REQUIRE_FALSE(is_constant(r.classification));
  const double tol = NewtonOptions{}.resolved_tol(op);
  const auto rep = run_diagnostics(r.u, r.epsilon, 2.0, 4.0, op, DiagnosticsTolerances::from_newton_tol(tol),
                                   first_mode(op).mu1);
  CHECK(rep.zero_avg_pass);
  CHECK(rep.energy_pass);
  CHECK(rep.representation_pass);
  CHECK(rep.representation_error <= 100 * tol);
  CHECK(rep.l1_pass);
  CHECK(rep.l1_norm_f <= 2 * min_depth_c0(2.0) * op.area + 1e-6);
  CHECK(rep.mean_in_bounds);
  REQUIRE(rep.poincare_ratio.has_value());
  CHECK(*rep.poincare_ratio >= 1.0 - 1e-8);
  CHECK(rep.exp_integral_q > op.area);
}

TEST_CASE("checks flag fields that are not solutions") {
  const auto& op = square32();
  const Vec& m = op.lumped_mass;
  const Vec c = Vec::Constant(op.size(), 0.5);
  CHECK_FALSE(check_zero_average(c, m, 2.0, 1e-9).pass);
  CHECK_FALSE(check_mean_bounds(Vec::Constant(op.size(), -0.1), m, 2.0).pass);
  CHECK_FALSE(check_mean_bounds(Vec::Constant(op.size(), 1.3), m, 2.0).pass);
  CHECK_FALSE(check_l1_bound(Vec::Constant(op.size(), 3.0), m, 2.0).pass);
  const SolutionRecord r = pattern_solution();
  Vec bent = r.u;
  bent[op.size() / 2] += 0.05;
  CHECK_FALSE(check_representation(bent, r.epsilon, 2.0, op, 1e-8).pass);
  CHECK(check_exp_integrability(400.0 * op.mesh.x_coordinates(), m, 4.0).overflow);
  CHECK_THROWS_AS(check_exp_integrability(c, m, 2.0), ValidationError);
}

TEST_CASE("Poincare ratio on random mean-zero fields and the zero field") {
  const auto& op = square32();
  const double mu1 = first_mode(op).mu1;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (int k = 0; k < 100; ++k) {
    const Vec v = project_mean_zero(Vec::NullaryExpr(op.size(), [&] { return g(rng); }), op.lumped_mass);
    CHECK(check_poincare(v, op.lumped_mass, op, mu1).pass);
  }
  try {
    check_poincare(Vec::Zero(op.size()), op.lumped_mass, op, mu1);
    FAIL("expected ZeroField");
  } catch (const NumericalError& e) {
    CHECK(e.kind() == NumericalFailure::kZeroField);
  }
}

TEST_CASE("Green constants respect the diameter bound") {
  const auto sq = estimate_green_constants(square32(), 6, 3);
  CHECK(sq.c2_est <= 4 * M_PI);
  CHECK(sq.c2_bound == doctest::Approx(4 * M_PI));
  CHECK(std::isfinite(sq.k_green_est));
  CHECK(sq.cq_estimate == doctest::Approx(sq.c2_est * std::exp(M_PI * sq.k_green_est)));
  const auto disk = estimate_green_constants(assemble(build_disk_mesh(4, 1.0)), 6, 3);
  CHECK(disk.c2_est <= disk.c2_bound);
  CHECK_THROWS_AS(estimate_green_constants(square32(), 0, 3), ValidationError);
}

TEST_CASE("Green regular-part estimate is mesh stable") {
  const auto coarse = estimate_green_constants(assemble(build_rectangle_mesh(32, 32, 1.0, 1.0)), 8, 5);
  const auto fine = estimate_green_constants(assemble(build_rectangle_mesh(64, 64, 1.0, 1.0)), 8, 5);
  CHECK(std::abs(fine.k_green_est - coarse.k_green_est) < 0.2 * std::abs(coarse.k_green_est));
}

TEST_CASE("Green columns are equivariant under x -> 1 - x") {
  const auto& op = square32();
  const int left = node_at(op.mesh, 0.25, 0.375);
  const int right = node_at(op.mesh, 0.75, 0.375);
  REQUIRE(left >= 0);
  REQUIRE(right >= 0);
  const Vec gl = green_column(op, left);
  const Vec gr = green_column(op, right);
  double worst = 0.0;
  for (std::size_t i = 0; i < op.mesh.num_nodes(); ++i) {
    const Point p = op.mesh.nodes[i];
    const int j = node_at(op.mesh, 1.0 - p.x, p.y);
    worst = std::max(worst, std::abs(gl[static_cast<Eigen::Index>(i)] - gr[j]));
  }
  CHECK(worst < 1e-6);
}
