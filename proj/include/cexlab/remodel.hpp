#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cexlab/dyadic.hpp"
#include "cexlab/hilbert.hpp"

namespace cexlab {

// Plain periodisation: 2^N affine copies of f tiled over the host interval.
NodePtr periodise(const NodePtr& f, int N);

// Second-order martingale difference: grandchild averages minus the global
// average, constant on grandchildren, mean zero.
NodePtr second_diff(const NodePtr& f);

// Averaged quasi-periodisation of frequency N: every interior cell of the
// 2^N-grid carries the grandchild-average skeleton of f rescaled; the two
// boundary cells carry the constant <f>. quasi_periodise_avg(f) - <f> equals
// quasi_periodise_avg(second_diff(f)) cell by cell.
NodePtr quasi_periodise_avg(const NodePtr& f, int N);

// Residual of that identity with the two sides derived through independent
// arithmetic (cached child averages vs haar-coefficient telescoping).
double qp_identity_residual(const NodePtr& f);

// One starting interval of the iterated remodeling.
struct StartingInterval {
  DyadicInterval cell;
  int N = 3;          // frequency: 2^N copies
  int step = 1;       // which remodeling step it belongs to
  int rank = 0;       // global encounter index
  bool chased = false; // spawned as an exceptional cell of an earlier one
  bool constant = false;
  std::array<double, 4> avg{};                  // component averages on cell
  std::array<std::array<double, 4>, 4> grand{}; // [grandchild][component]
};

struct RemodelStep {
  std::vector<StartingInterval> starting;  // in rank order
  std::vector<DyadicInterval> regular;     // regular stopping intervals
  double defect = 0;  // mass of unchased non-constant exceptional cells
};

struct RemodelCaps {
  // Chase an exceptional cell while its measure relative to the enclosing
  // non-chased starting interval stays >= chase_mass (defect <= 2*chase_mass
  // per region at the minimum frequency).
  double chase_mass = 0x1p-30;
  std::int64_t max_starting = std::int64_t{1} << 21;
  int max_gen = DyadicInterval::kMaxGen;
  bool child_step = false;  // demo mode: step on ch instead of ch^2
  // Verify the per-step decomposition by flattening the averaged trees; the
  // check is skipped (decomp_checked = false) past this cell budget.
  std::size_t check_max_cells = std::size_t{1} << 18;
};

struct RemodelState {
  int k = 0;
  std::vector<RemodelStep> steps;           // size k
  AdaptiveTree tree;                        // full rearranged function
  AdaptiveTree averaged;                    // grandchild-constant skeleton
  std::vector<AdaptiveTree> averaged_by_step;  // X^0 .. X^k
  double identity_err = 0;   // worst quasi-periodisation identity residual
  double decomp_err = 0;     // worst step-decomposition residual
  bool decomp_checked = false;
  double defect = 0;         // total unchased mass
};

using FrequencyPolicy = std::function<int(const StartingInterval&)>;

FrequencyPolicy uniform_frequency(int N);
// Keys are DyadicInterval::key() strings ("gen:idx").
FrequencyPolicy scheduled_frequency(std::unordered_map<std::string, int> by_key,
                                    int default_N);

// K-step iterated remodeling: step 1 remodels [0,1) and chases its
// exceptional cells, step k+1 remodels every grandchild of every regular
// cell of step k. Constant regions still emit their stopping family but are
// exact as placed: no chase, no defect. Unchased exceptional cells keep the
// uncompressed source copy in `tree` (the output stays an exact
// rearrangement) and a frozen constant in `averaged`.
RemodelState remodel_iterate(const AdaptiveTree& in, const FrequencyPolicy& freq,
                             int K = 3, const RemodelCaps& caps = {});

// D_J F for one starting interval: the averaged quasi-periodisation of the
// second difference, as a step function supported on the cell.
StepFunctionR d_contribution(const StartingInterval& s, int comp);

// (interval, average) for all dyadic intervals touching 0 or 1 down to the
// leaves of the averaged tree; all equal the global average.
std::vector<std::pair<DyadicInterval, double>> boundary_averages(
    const RemodelState& state, int comp);

}  // namespace cexlab
