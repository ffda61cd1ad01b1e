#pragma once

#include <cstdint>

#include "cexlab/dyadic.hpp"
#include "cexlab/hilbert.hpp"

namespace cexlab {

// Component layout convention for weight trees: 0 = w, 1 = sigma, and for
// four-component trees 2 = bold f, 3 = bold g.
inline constexpr int kCompW = 0;
inline constexpr int kCompSigma = 1;
inline constexpr int kCompF = 2;
inline constexpr int kCompG = 3;

struct ApResult {
  double sup = 0;
  DyadicInterval argmax;
};

// sup over all dyadic intervals of <w>_I <sigma>_I^{p-1}, with the argmax at
// the smallest generation (then smallest index) attaining it exactly. When the
// attaining position sits below DyadicInterval::kMaxGen generations the argmax
// degrades to its deepest representable ancestor; the sup stays exact.
ApResult ap_dyadic_components(const NodePtr& root, int comp_w, int comp_sigma,
                              double p);
ApResult ap_dyadic(const AdaptiveTree& w, const AdaptiveTree& sigma, double p);

enum class SmoothnessKind { kDyadic, kStrongDyadic };

// Dyadic: sup of sibling average ratios. Strong dyadic: sup over all pairs of
// adjacent equal-length dyadic intervals (covered exactly by sibling ratios
// plus boundary-pair recursion, leaves extending as constants).
double smoothness_component(const NodePtr& root, int comp, SmoothnessKind kind);
double smoothness(const AdaptiveTree& w, SmoothnessKind kind);

// sup over children I of 2 <w>_parent / <w>_I (equals the measure-doubling
// constant sup w(parent)/w(child)).
double doubling_component(const NodePtr& root, int comp);

// || bold/weight ||_{L^q(weight)} as an exact leafwise sum.
double weighted_norm_components(const NodePtr& root, int comp_bold,
                                int comp_weight, double q);
double weighted_norm(const AdaptiveTree& bold, const AdaptiveTree& weight,
                     double q);

// Joint refinement of two trees into one carrying both value sets
// (components of `b` appended after those of `a`); sharing preserved via
// pairwise memoisation.
AdaptiveTree tree_zip(const AdaptiveTree& a, const AdaptiveTree& b);

struct PoissonProbe {
  double lambda_re = 0;
  double lambda_im = 0;
  double poisson = 0;  // int (Im l)^{p-1} / |x-l|^p w(x) dx
  double average = 0;  // plain average over [Re l - Im l, Re l + Im l)
};

// Closed form (arctan) at p = 2, adaptive quadrature otherwise.
PoissonProbe poisson_vs_average(const StepFunctionR& w, double lambda_re,
                                double lambda_im, double p);

// Lower bound for the continuous characteristic by seeded random intervals
// inside the support of the step functions (log-uniform lengths).
double sampled_continuous_char(const StepFunctionR& w, const StepFunctionR& sigma,
                               double p, int samples, std::uint64_t seed);

struct WeightsReport {
  double p = 0;
  ApResult ap;
  double s_dyadic_w = 0, s_strong_w = 0;
  double s_dyadic_sigma = 0, s_strong_sigma = 0;
  double doubling_w = 0, doubling_sigma = 0;
  double mass_w = 0, mass_sigma = 0;
  double leftover = 0;  // frozen-leaf fraction
};

// Bundled measurements of a (w, sigma[, f, g]) tree.
WeightsReport measure_weights(const AdaptiveTree& quad, double p);

}  // namespace cexlab
