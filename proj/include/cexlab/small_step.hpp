#pragma once

#include <array>
#include <utility>
#include <vector>

#include "cexlab/dyadic.hpp"

namespace cexlab {

// Depth caps (in generations) per stopping region: hitting-time tails of a
// +-span walk decay geometrically beyond span^2 steps. The generic walk has
// span d and one generation per step; the triangle walk's slowest coordinate
// has span 2d and two generations per step.
int default_generic_cap(int d);   // 8 d^2 + 16
int default_triangle_cap(int d);  // 8 (2d)^2 + 16

// Order-d stopping family of a region: the walk s -> s +- 1 (right child +1)
// emits a cell into `plus`/`minus` on first hitting +-d; cells still in
// flight at the depth cap land in `leftover` with their walk state. Lists are
// abandoned (lists_complete = false) past list_limit; the masses are exact
// regardless, computed on the walk lattice rather than the tree.
struct StoppingFamily {
  int d = 1;
  std::vector<DyadicInterval> minus, plus;
  std::vector<DyadicInterval> plus_plus, plus_minus;  // triangle variant
  std::vector<std::pair<DyadicInterval, std::array<int, 2>>> leftover;
  bool lists_complete = true;
  double mass_minus = 0, mass_plus = 0;
  double mass_plus_plus = 0, mass_plus_minus = 0;
  double mass_leftover = 0;
};

StoppingFamily stopping_family(const DyadicInterval& I, int d, int gens_cap,
                               std::size_t list_limit = 1 << 20);

// sum of |K| over the walk cells strictly above the stopping cells (the
// walk's expected stopping time scaled by |I|); tends to d^2 |I|.
double intermediate_mass(const DyadicInterval& I, int d, int gens_cap);

struct GenericMasses {
  double minus = 0, plus = 0, leftover = 0, intermediate = 0;
};
GenericMasses generic_walk_masses(int d, int gens_cap);

// Generic small-step rearrangement: every one-generation jump of the input
// martingale is replaced by a +-1/d walk stopped at +-d; minus-cells receive
// the recursively transformed left restriction, plus-cells the right one,
// and cells cut off by the cap freeze at their running average.
struct SmallStepResult {
  AdaptiveTree tree;
  double leftover = 0;  // frozen mass
};
SmallStepResult small_step_transform(const AdaptiveTree& in, int d,
                                     int gens_cap = -1);

// Triangle variant. States live on the integer lattice (u, v) |-> value
// a + (u/d) haar_I + (v/2d) haar_{I+}, inside the triangle with vertices
// (-d,0), (d,2d), (d,-2d); interior cells take the two-generation step
// (u-1,v) | (u+1,v-1), (u+1,v+1); cells on a non-base side slide along it,
// cells on the base walk in v alone; the -e1 vertex receives the recursively
// transformed left restriction and the base vertices the right grandchild
// constants. All moves consume two generations, so no component other than
// the one with nonzero haar at I+ can split at odd generations.
struct TriangleMasses {
  double minus = 0, plus_plus = 0, plus_minus = 0, leftover = 0;
  double interior_visits = 0;  // sum of |K|/|I| over interior walk cells
};
TriangleMasses triangle_walk_masses(int d, int gens_cap);

StoppingFamily triangle_stopping(const DyadicInterval& I, int d, int gens_cap,
                                 std::size_t list_limit = 1 << 20);

struct TriangleResult {
  AdaptiveTree tree;
  double leftover = 0;
};
// Requires each region's right child to be constant on its children.
TriangleResult small_step_triangle_transform(const AdaptiveTree& in, int d,
                                             int gens_cap = -1);

// max |haar| of a component over all odd-generation positions (positions, not
// shared nodes: a node reachable at both parities is scanned at both).
double max_abs_haar_odd_generation(const NodePtr& root, int comp);

}  // namespace cexlab
