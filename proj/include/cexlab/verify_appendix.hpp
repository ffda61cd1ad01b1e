#pragma once

#include <cstdint>
#include <vector>

#include "cexlab/hilbert.hpp"

namespace cexlab {

// Symmetric +-1 random walk from 0 absorbed at +b or -a (a, b >= 1).
struct WalkLaw {
  double hit_upper;      // P(absorbed at +b); closed form a/(a+b)
  double expected_steps; // E[absorption time]; closed form a*b
};

// Exact absorbing-chain solve (tridiagonal systems on the interior states).
WalkLaw walk_laws(int a, int b);
double walk_hit_probability(int a, int b);

// Monte Carlo companion; returns the empirical hit frequency.
double walk_hit_mc(int a, int b, int n, std::uint64_t seed);

// Points (a1,b1), (a2,b2) on the unit hyperbola a b^{p-1} = 1 whose midpoint
// is the given (x, y); a1 >= x >= a2, b1 <= y <= b2.
struct HyperbolaPoints {
  double a1, b1, a2, b2;
};
HyperbolaPoints lower_hyperbola_solve(double x, double y, double p);

// sup over the segment [(x1,y1),(x2,y2)] of x y^{p-1}, given that both
// endpoints and the midpoint have products <= A; the sup never exceeds 2^p A.
struct UpperHyperbolaBound {
  double sup;
  bool bound_ok;  // sup <= 2^p * A
};
UpperHyperbolaBound upper_hyperbola_bound(double x1, double y1, double x2,
                                          double y2, double p, double A);

// Power-weight pair w = |t|^{p-1}, sigma = min(1, |t|^{-p/(p-1)}): the joint
// characteristic over intervals is finite, yet the transform of 1_{[0,1)}
// sigma has norm growing like ln T. Averages use closed-form antiderivatives;
// the norm integral is quadrature of |ln(t/(t-1))|^p t^{p-1}, whose growth
// slope against ln T is exactly 1 in the limit.
struct TwoWeightReport {
  double p = 0;
  double ap_sampled_sup = 0;      // over seeded intervals
  int samples = 0;
  std::vector<double> t_values;
  std::vector<double> norm_integrals;
  double slope_vs_logT = 0;
  double tail_ratio_lo = 0, tail_ratio_hi = 0;  // integrand * t over [10,1e6]
  bool quadrature_ok = false;
  std::uint64_t seed = 0;
};
TwoWeightReport two_weight_counterexample(double p, const std::vector<double>& t_list,
                                          std::uint64_t seed);

// Closed-form averages of the pair above (exposed for tests).
double power_weight_average(double a, double b, double p);   // <|t|^{p-1}>
double power_sigma_average(double a, double b, double p);

// Largest delta in (0, 1/4) satisfying both transcendental smoothness-
// transfer conditions for the given epsilon.
double delta_for_epsilon(double eps);

// Checks the transfer from strong dyadic smoothness to arbitrary intervals on
// weights realized as step functions over a dyadic-aligned window [0, 2^L):
// endpoint-cell average ratios, halves ratios of arbitrary intervals, and the
// continuous-vs-dyadic characteristic factor 5/4.
struct NazarovReport {
  bool smoothness_ok = false;   // S^sd <= 1 + delta over the window
  double ssd_w = 0, ssd_sigma = 0;
  double worst_endpoint_ratio = 0;  // vs bound (1+eps)^{1/2}
  bool claim_ok = false;
  double worst_halves_ratio = 0;    // vs bound 1+eps
  bool halves_ok = false;
  double dyadic_char = 0;
  double sampled_char = 0;
  bool lemma2_ok = false;           // sampled <= (5/4) dyadic + tol
  int samples = 0;
};
NazarovReport nazarov_transfer_check(const StepFunctionR& w,
                                     const StepFunctionR& sigma, double p,
                                     double delta, double eps,
                                     std::uint64_t seed);

// S^sd of a step function whose breakpoints lie on a dyadic grid of [0, 2^L).
double step_strong_dyadic_smoothness(const StepFunctionR& f);

// sup of <w><sigma>^{p-1} over all dyadic subintervals of the window.
double step_dyadic_char(const StepFunctionR& w, const StepFunctionR& sigma,
                        double p);

}  // namespace cexlab
