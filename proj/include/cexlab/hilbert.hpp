#pragma once

#include <cstddef>
#include <vector>

#include "cexlab/dyadic.hpp"

namespace cexlab {

// Piecewise-constant compactly supported function on the line: value vs[i]
// on [xs[i], xs[i+1]), zero outside [xs.front(), xs.back()).
struct StepFunctionR {
  std::vector<double> xs;  // strictly increasing, size n+1
  std::vector<double> vs;  // size n

  std::size_t cells() const { return vs.size(); }
  void validate() const;

  double integral(double a, double b) const;
  double average(double a, double b) const;
  double total_integral() const;

  // Merges adjacent equal-value cells (pairings scale quadratically in cell
  // count, so callers compact before pairing).
  StepFunctionR compacted() const;

  static StepFunctionR indicator(double a, double b, double value = 1.0);
  // Haar function of [a,b): -1 on the left half, +1 on the right half.
  static StepFunctionR haar(double a, double b, double scale = 1.0);
};

// Pairing is exact and O(cells^2); this cap bounds a single pairing to
// minutes on one core rather than guarding against it entirely, since
// deep-remodel profiles legitimately reach the hundreds of thousands.
inline constexpr std::size_t kMaxPairCells = 1u << 20;

// Flatten one component of a tree to a step function on [0,1).
StepFunctionR to_step_function(const NodePtr& root, int component,
                               std::size_t max_cells = kMaxPairCells);

// Hilbert transform convention: H(G)(x) = (1/pi) pv-int G(y)/(y-x) dy. With
// this sign H(haar([0,1)))(x) = (1/pi) ln(4|x(x-1)|/(2x-1)^2), the pairing
// form <H(h_I), h_{I+}> is negative, and all one-sided sign lemmas below hold
// as stated. The transpose convention only flips signs; every lower bound on
// magnitudes is convention-free.
//
// pair(F, G) = <H(G), F>, evaluated exactly per cell pair through the
// antiderivative L(u) = u(ln|u| - 1), compensated summation, deterministic
// under any thread count.
double pair(const StepFunctionR& F, const StepFunctionR& G, int threads = 0);

// Same pairing by adaptive quadrature of the inner closed form (oracle for
// tests; slow, and log endpoints are shaved by a relative 1e-11 margin).
double pair_quadrature(const StepFunctionR& F, const StepFunctionR& G,
                       double tol = 1e-10);

// c = -<H(h_{[0,1)}), h_{[1/2,1)}> > 0; cached after the first call.
double constant_c();

// <H(sum_J h_J), sum_J h_{J+}> for pairwise disjoint equal-length intervals
// J = [starts[i], starts[i]+len). Always <= -c * (total length) + epsilon.
double lemma_b_form(const std::vector<double>& starts, double len);

// <H(h_{[0,1)}), h_{[a,a+1/2)}> for a >= 1; strictly decreasing in a.
double monotone_profile(double a);

// Explicit H(haar([0,1)))(x) in the convention above (test oracle).
double hilbert_of_haar(double x);

}  // namespace cexlab
