#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cexlab/characteristics.hpp"
#include "cexlab/hilbert.hpp"
#include "cexlab/large_step.hpp"
#include "cexlab/remodel.hpp"
#include "cexlab/small_step.hpp"

namespace cexlab {

// Mirror-periodic extension of a unit-interval profile to [-W, W+1]: the cell
// [k, k+1) carries a translate of the base for even k and a reflection for
// odd k. Adjacent integer-boundary cells are mirror images, so equal-length
// intervals meeting at an integer have equal averages, and both the strong
// dyadic smoothness and the dyadic characteristic over the window coincide
// with their [0,1) values.
StepFunctionR extend_to_line(const StepFunctionR& base, int W);

// ---------------------------------------------------------------------------
// Smooth one-weight example for the Hilbert transform: power-scale seed pair,
// triangle small-step rearrangement, then iterated remodeling with
// adaptively selected frequencies.

struct HilbertParams {
  double p = 2;
  double M = 4;               // seed characteristic scale, > 2
  int d = 4;                  // triangle walk order
  int K = 2;                  // remodeling steps
  int cell_budget = 1 << 14;  // cap on 2^N cells per periodisation
  double chase_mass = 0x1p-4; // relative chase cutoff (one chase level at N=3)
  int threads = 0;            // forwarded to the pairing engine
  std::uint64_t seed = 0;     // echoed; the pipeline itself is deterministic
};

// One frequency-selection decision (in enumeration order k = rank + 1).
struct FrequencyRecord {
  int k = 0;
  int step = 0;
  std::string cell;           // "gen:idx"
  bool constant = false;      // leaf content: D identically zero
  int N = 3;                  // committed frequency
  double t_value = 0;         // committed cross term T_k
  double geometric = 0;       // eps' / 2^{k+1}
  double allowance = 0;       // max(geometric, absolute floor)
  bool over_geometric = false;// |T_k| > geometric (informational)
  bool exhausted = false;     // |T_k| > allowance at every admissible N
};

struct HilbertReport {
  HilbertParams params;
  LargeStepParams ls;
  double norm_f = 0, norm_g = 0;  // ||f||_{L^p(sigma)}, ||g||_{L^{p'}(w)}
  double leftover = 0;            // frozen mass of the triangle stage
  double odd_haar_sup = 0;        // sup odd-generation |haar| of w, sigma, g
  double damage_shift_in = 0;     // seed pair
  double damage_shift_tri = 0;    // triangle output, all generations
  double damage_truncated = 0;    // triangle output, generations < 2K
  double c = 0;                   // pairing constant of the engine
  double C_p = 0;                 // damage_truncated / (M ||f|| ||g||)
  double eps_prime = 0;           // (c C_p / 2) M ||f|| ||g||
  std::vector<FrequencyRecord> freq;
  double cross_sum_abs = 0;       // sum |T_k|
  int over_geometric_count = 0;
  int exhausted_count = 0;
  double avg_pairing = 0;         // <H(<g>1), <f>1> (zero by antisymmetry)
  double main_sum = 0;            // sum over startings of <H(D g), D f>
  double main_step1 = 0;          // step-1 startings only
  double gen0_product = 0;        // (haar_{I0} g)(haar_{(I0)+} f)|I0|
  double total_pairing = 0;       // <H(g), f> of the averaged output
  double identity_residual = 0;   // |total - (avg + main_sum + sum T_k)|
  double normalized = 0;          // |total| / (||f|| ||g||)
  double ratio_to_M = 0;          // normalized / M
  double remodel_identity_err = 0;
  double remodel_decomp_err = 0;
  bool decomp_checked = false;
  double defect = 0;              // unchased mass
  std::int64_t startings = 0;
  WeightsReport weights;          // measured on the full rearranged quad
  bool cross_ok = false;          // cross_sum_abs <= eps_prime
  bool main_ok = false;           // -main_sum >= c * damage_truncated - 1e-6
  bool step1_ok = false;          // -main_step1 >= c * gen0_product - 1e-8
  bool identity_ok = false;       // identity_residual <= 1e-6
};

HilbertReport hilbert_example(const HilbertParams& params);

// Same run, keeping the trees and the flattened components of the averaged
// output (f, g as paired; w, sigma as glued by the Sarason construction).
struct HilbertArtifacts {
  HilbertReport report;
  AdaptiveTree full;      // exact rearrangement, deep
  AdaptiveTree averaged;  // grandchild-constant skeleton, flattenable
  StepFunctionR w_step, sigma_step, f_step, g_step;
};

HilbertArtifacts hilbert_example_artifacts(const HilbertParams& params);

std::string to_json(const HilbertReport& r);

// ---------------------------------------------------------------------------
// Direct sum of singularities: mass-normalized copies of the Hilbert example
// at scale M_k = 4k glued onto J_k = [2^-k, 2^-k+1), constant 1 on the
// leftover cell. Copy values are divided by the copy's mass so every glued
// average over J_k equals 1 exactly.

struct SarasonParams {
  double p = 2;
  int k_max = 4;  // <= 6
  double M = 4;   // seed scale shared by every copy
  int d = 2;      // narrow small step: concentrates damage into early generations
  int K = 1;      // base depth; copy k remodels K + k/2 steps (clamped to 3)
  int cell_budget = 1 << 14;
  double chase_mass = 0x1p-4;
  int threads = 0;
  std::uint64_t seed = 0;
  int char_samples = 2000;  // continuous-characteristic probe on the glue
};

struct SarasonCopy {
  int k = 0;
  double M = 0;             // seed scale of this copy
  double w_mass = 0;        // w_k([0,1))
  double sigma_mass = 0;    // sigma_k([0,1))
  double copy_char = 0;     // [w_k, sigma_k]_{A_p,D} before normalization
  double wavg_J = 0;        // glued <w>_{J_k} (exactly 1)
  double savg_J = 0;        // glued <sigma>_{J_k} (exactly 1)
  double pairing = 0;       // <H(g_k), f_k> of the rescaled copy on J_k
  double norm_f = 0;        // ||f_k||_{L^p(sigma)} after gluing
  double norm_g = 0;        // ||g_k||_{L^{p'}(w)} after gluing
  double ratio = 0;         // |pairing| / (norm_f norm_g)
  double ratio_over_growth = 0;  // ratio / k^{1/p'}
};

struct SarasonReport {
  SarasonParams params;
  std::vector<SarasonCopy> copies;
  double joint_char = 0;        // [w,sigma]_{A_p,D([0,1))} of the glued pair
  double s_strong_w = 0, s_strong_sigma = 0;
  double transfer_factor = 1.25;  // continuous char <= factor * dyadic
  double continuous_bound = 0;    // transfer_factor * joint_char
  double sampled_char = 0;        // sampled intervals on the glued skeleton
  double spearman_growth = 0;     // ratio_k / k^{1/p'} against k
  bool wavg_exact = false;        // every <.>_{J_k} equal to 1 bitwise
  std::vector<HilbertReport> runs;
};

SarasonReport sarason_direct_sum(const SarasonParams& params);
std::string to_json(const SarasonReport& r);

// ---------------------------------------------------------------------------
// Two-valued weight of prescribed characteristic: two-leaf hyperbola seed,
// generic small step of order d, iterated remodeling at a uniform frequency.
// The output leaves keep the seed values verbatim (frozen walk leaves carry
// running averages and are excluded from the value census).

struct TwoValuedParams {
  double p = 2;
  double Q = 4;  // > 1
  int d = 16;
  int N = 3;     // uniform remodeling frequency
  int K = 2;
  double chase_mass = 0x1p-4;
  std::uint64_t seed = 0;
};

struct TwoValuedReport {
  TwoValuedParams params;
  double a1 = 0, b1 = 0, a2 = 0, b2 = 0;  // seed values, a1 b1^{p-1} = 1
  double ap_seed = 0;      // seed characteristic (Q up to solver roundoff)
  double ap_out = 0;       // output characteristic
  double window_low = 0;   // Q
  double window_high = 0;  // 2^p (5/4) Q
  std::vector<double> w_values, sigma_values;  // distinct non-frozen values
  double leftover = 0;     // frozen mass of the walk stage
  double s_seed_w = 0, s_seed_sigma = 0;      // seed S^d
  double s_strong_w = 0, s_strong_sigma = 0;  // output S^sd
  double smooth_bound = 0;  // (1 + (max seed S^d - 1)/d)^3
  double eps_implied = 0;   // smooth_bound - 1
  double defect = 0;
  bool cardinality_ok = false;
  bool window_ok = false;
  bool smooth_ok = false;
};

TwoValuedReport two_valued_weight(const TwoValuedParams& params);

// Same run, keeping the rearranged tree and the averaged skeleton flattened
// to (w, sigma) step functions on [0,1).
struct TwoValuedArtifacts {
  TwoValuedReport report;
  AdaptiveTree full;
  AdaptiveTree averaged;
  StepFunctionR w_step, sigma_step;
};

TwoValuedArtifacts two_valued_artifacts(const TwoValuedParams& params);
std::string to_json(const TwoValuedReport& r);

}  // namespace cexlab
