#pragma once

#include "cexlab/dyadic.hpp"
#include "cexlab/verify_appendix.hpp"

namespace cexlab {

// Power-like weight scale: w = 2^{n beta} on J_n = [2^-n, 2^{-n+1}), truncated
// below I_{N+1} = [0, 2^{-N-1}) by a two-value hyperbola tail preserving the
// (w, sigma) averages of the untruncated weight there.
struct LargeStepParams {
  double p = 2;    // > 1
  double M = 4;    // > 2
  double beta = 0; // 1 - 1/(2Me), in (1/2, 1)
  int N = 0;       // least N with sum_{n=0}^{N} 2^{n(beta-1)} >= M
};

LargeStepParams make_large_step_params(double p, double M);

// Averages of the untruncated pair on I_n = [0, 2^-n):
//   <w>_{I_n} = 2^{n beta} / (2^{1-beta} - 1),
//   <sigma>_{I_n} = 2^{-n gamma} / (2^{gamma+1} - 1),  gamma = beta/(p-1).
double infinite_w_average(const LargeStepParams& params, int n);
double infinite_sigma_average(const LargeStepParams& params, int n);

// Tail values on the two deepest cells, relabeled so a1 < a2; a1 goes on
// J_{N+2} (right half of I_{N+1}) and a2 on I_{N+2}, making the Haar
// coefficient of w at I_{N+1} negative like at every I_n above it.
HyperbolaPoints large_step_tail(const LargeStepParams& params);

// Two-component tree (w, sigma) on the partition {J_1..J_{N+2}, I_{N+2}}.
AdaptiveTree build_weights(const LargeStepParams& params);

// Four-component quads (w, sigma, f, g) with g = -w exactly.
// Multiplier pair: f alternates (-1)^{n-1} on J_n, constant on I_{N+1} at the
// value the untruncated alternating pattern averages to there, so f has no
// Haar coefficients below the truncation.
AdaptiveTree build_mult_pair(const LargeStepParams& params,
                             const AdaptiveTree& weights);
// Shift pair: f = sum of Haar functions of J_1..J_{N+1}, zero on I_{N+1}.
AdaptiveTree build_shift_pair(const LargeStepParams& params,
                              const AdaptiveTree& weights);

// sum over positions I of |I| |haar_I(f)| |haar_I(g)|.
double damage_mult_components(const NodePtr& root, int comp_f, int comp_g);
double damage_mult(const AdaptiveTree& quad);
double damage_mult(const AdaptiveTree& f, const AdaptiveTree& g);

// sum over positions I of |I| haar_I(g) (haar_{I+}(f) - haar_{I-}(f)).
double damage_shift_components(const NodePtr& root, int comp_f, int comp_g);
double damage_shift(const AdaptiveTree& quad);
double damage_shift(const AdaptiveTree& f, const AdaptiveTree& g);

// Same sums restricted to positions with generation < gen_limit.
double damage_mult_capped(const NodePtr& root, int comp_f, int comp_g,
                          int gen_limit);
double damage_shift_capped(const NodePtr& root, int comp_f, int comp_g,
                           int gen_limit);

}  // namespace cexlab
