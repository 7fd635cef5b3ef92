#pragma once

// The reaction term f(t) = e^t - 1 - a t of the steady-state problem
//   -eps * Lap(u) = f(u),  du/dn = 0,
// and the explicit constants of the a priori estimate chain.

#include <optional>

namespace rigidity {

/// Arguments beyond this magnitude are treated as overflow.
inline constexpr double kSaturationThreshold = 700.0;

/// Scalar problem data. Construction enforces a > 1, epsilon > 0, q > 2.
class ModelParams {
 public:
  ModelParams(double a, double epsilon, double q = 4.0);

  double a() const noexcept { return a_; }
  double epsilon() const noexcept { return epsilon_; }
  double q() const noexcept { return q_; }

 private:
  double a_;
  double epsilon_;
  double q_;
};

struct SaturatedValue {
  double value;
  bool saturated;
};

double eval_f(double t, double a);
double eval_f_prime(double t, double a);

/// f(t) with |t| > kSaturationThreshold clamped to a large finite magnitude
/// and flagged, so that residual norms never see infinities.
SaturatedValue eval_f_checked(double t, double a);

/// Unique positive root of e^t = 1 + a t. Bisection from [log a, ...]
/// followed by a Newton polish; |f(xi)| <= tol on return.
double find_xi(double a, double tol = 1e-14);

/// -min f = a log a - a + 1.
double min_depth_c0(double a);

/// Lipschitz bound of f on [-M, M]: max{e^M - a, a - e^-M}.
double lipschitz_k(double sup_bound, double a);

struct ConstantChain {
  double a = 0.0;
  double q = 0.0;
  double area = 0.0;
  double diameter = 0.0;
  double xi_a = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;        // L1 bound on f(u): 2 c0 |Omega|
  double eps0 = 0.0;      // q c1 / pi
  double c2_bound = 0.0;  // 2 pi D^2
  std::optional<double> k_green;  // filled from a numerical Green estimate

  double eps0_of(double q_other) const;
  double lipschitz_k_of(double sup_bound) const { return lipschitz_k(sup_bound, a); }
  /// K(M) / mu1: above this diffusion rate every solution with sup <= M is constant.
  double threshold_of(double sup_bound, double mu1) const;
};

ConstantChain constant_chain(const ModelParams& params, double area, double diameter);
/// The chain does not depend on eps; this form skips constructing ModelParams.
ConstantChain constant_chain(double a, double q, double area, double diameter);

/// f'(xi_a) / mu_k: where mode k of the linearization about u = xi_a is neutral.
double bifurcation_epsilon(double a, double mu_k);

}  // namespace rigidity
