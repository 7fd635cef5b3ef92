#include "rigidity/scalar_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rigidity/errors.hpp"

namespace rigidity {

ModelParams::ModelParams(double a, double epsilon, double q) : a_(a), epsilon_(epsilon), q_(q) {
  if (!(a > 1.0)) throw ValidationError("a must exceed 1");
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (!(q > 2.0)) throw ValidationError("q must exceed 2");
}

double eval_f(double t, double a) { return std::expm1(t) - a * t; }

double eval_f_prime(double t, double a) { return std::exp(t) - a; }

SaturatedValue eval_f_checked(double t, double a) {
  if (std::isnan(t)) return {std::numeric_limits<double>::max(), true};
  if (t > kSaturationThreshold) return {std::numeric_limits<double>::max(), true};
  if (t < -kSaturationThreshold) {
    // e^t is negligible here, but -a t may still be huge; clamp consistently.
    return {std::min(-1.0 - a * t, std::numeric_limits<double>::max()), true};
  }
  return {eval_f(t, a), false};
}

double find_xi(double a, double tol) {
  if (!(a > 1.0)) throw ValidationError("a must exceed 1");
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");

  // f < 0 at log a (global minimum) and convex on the right, so one sign change.
  double lo = std::log(a);
  double width = std::max(2.0, 4.0 * a);
  double hi = lo + width;
  while (eval_f(hi, a) <= 0.0) {
    width *= 2.0;
    hi = lo + width;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-8 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (eval_f(mid, a) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  // Newton polish from the right: monotone for a convex increasing function.
  double t = hi;
  for (int i = 0; i < 50; ++i) {
    const double step = eval_f(t, a) / eval_f_prime(t, a);
    t -= step;
    if (std::abs(step) <= 1e-16 * t) break;
  }
  if (!(std::abs(eval_f(t, a)) <= tol) || !(t > std::log(a))) {
    // The tolerance may lie below the attainable floor for this a; accept the
    // best bracketed point only if the floor is all that separates us.
    const double floor = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + a * t);
    if (!(std::abs(eval_f(t, a)) <= std::max(tol, floor))) {
      throw NumericalError(NumericalFailure::kNoConvergence, "root polish failed",
                           std::abs(eval_f(t, a)));
    }
  }
  return t;
}

double min_depth_c0(double a) { return a * std::log(a) - a + 1.0; }

double lipschitz_k(double sup_bound, double a) {
  return std::max(std::exp(sup_bound) - a, a - std::exp(-sup_bound));
}

double ConstantChain::eps0_of(double q_other) const { return q_other * c1 / std::numbers::pi; }

double ConstantChain::threshold_of(double sup_bound, double mu1) const {
  if (!(mu1 > 0.0)) throw ValidationError("mu1 must be positive");
  return lipschitz_k_of(sup_bound) / mu1;
}

ConstantChain constant_chain(const ModelParams& params, double area, double diameter) {
  if (!(area > 0.0)) throw ValidationError("area must be positive");
  if (!(diameter > 0.0)) throw ValidationError("diameter must be positive");
  ConstantChain chain;
  chain.a = params.a();
  chain.q = params.q();
  chain.area = area;
  chain.diameter = diameter;
  chain.xi_a = find_xi(params.a());
  chain.c0 = min_depth_c0(params.a());
  chain.c1 = 2.0 * chain.c0 * area;
  chain.eps0 = chain.eps0_of(params.q());
  chain.c2_bound = 2.0 * std::numbers::pi * diameter * diameter;
  return chain;
}

ConstantChain constant_chain(double a, double q, double area, double diameter) {
  return constant_chain(ModelParams(a, 1.0, q), area, diameter);
}

double bifurcation_epsilon(double a, double mu_k) {
  if (!(mu_k > 0.0)) throw ValidationError("mu_k must be positive");
  return eval_f_prime(find_xi(a), a) / mu_k;
}

}  // namespace rigidity
