#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "cexlab/error.hpp"

namespace cexlab {

// Half-open dyadic subinterval [idx*2^-gen, (idx+1)*2^-gen) of [0,1).
struct DyadicInterval {
  static constexpr int kMaxGen = 62;

  int gen = 0;
  std::uint64_t idx = 0;

  DyadicInterval() = default;
  DyadicInterval(int g, std::uint64_t i);

  double measure() const;
  double left_endpoint() const;
  double right_endpoint() const;

  DyadicInterval left() const;   // left half
  DyadicInterval right() const;  // right half
  DyadicInterval parent() const;
  DyadicInterval sibling() const;
  bool is_right_child() const;

  bool contains(const DyadicInterval& other) const;

  // Exact left endpoint as a multiple of 2^-g; requires g >= gen.
  std::uint64_t scaled_left(int g) const;

  std::string key() const;  // "gen:idx"
  static DyadicInterval parse_key(const std::string& key);

  friend bool operator==(const DyadicInterval&, const DyadicInterval&) = default;
  friend auto operator<=>(const DyadicInterval&, const DyadicInterval&) = default;
};

class Node;
using NodePtr = std::shared_ptr<const Node>;

// Immutable node of a binary martingale tree over [0,1). Subtrees are shared
// aggressively (stopping-time constructions produce DAGs whose expanded size
// is astronomically larger than the shared size), so nodes are reached only
// through shared pointers and every traversal that folds values is memoised
// on the node pointer.
//
// A leaf carries the constant values of all components on its cell; a branch
// caches the componentwise averages of its children, so the martingale
// property avg = (avg_left + avg_right)/2 holds by construction.
class Node {
 public:
  NodePtr l, r;                    // null for leaves
  std::array<double, 4> vals{};    // leaf: values; branch: cached averages
  int depth = 0;                   // leaf 0, branch 1 + max(children)
  std::uint8_t dim = 1;
  bool frozen = false;             // leaf holds a running average, not source data

  bool is_leaf() const { return !l; }
  double v(int c) const { return vals[c]; }
};

NodePtr make_leaf(const std::vector<double>& vals, bool frozen = false);
NodePtr make_leaf(std::initializer_list<double> vals, bool frozen = false);
NodePtr make_branch(const NodePtr& l, const NodePtr& r);

// Haar coefficient <.>_{right half} - <.>_{whole} of component c at a node;
// zero at (or below) leaves.
double node_haar(const Node* n, int c);

// Deepest existing node whose cell contains I (stops at a leaf). Never null.
const Node* descend(const NodePtr& root, const DyadicInterval& I);

// Saturating count of the fully expanded (share-free) node count.
std::int64_t expanded_node_count(const NodePtr& root, std::int64_t cap);

// Number of distinct shared nodes reachable from root.
std::int64_t shared_node_count(const NodePtr& root);

// Fraction of [0,1) covered by frozen leaves.
double frozen_mass(const NodePtr& root);

// Post-order fold memoised on node identity, computed iteratively so deep
// chains cannot overflow the stack. Every subtree is evaluated once no matter
// how often it is shared.
double memo_fold(const NodePtr& root,
                 const std::function<double(const Node*)>& leaf_value,
                 const std::function<double(const Node*, double, double)>& branch_value);

// Same fold, but the whole per-node table is returned (argmax reconstruction
// descends through it).
std::unordered_map<const Node*, double> memo_fold_map(
    const NodePtr& root,
    const std::function<double(const Node*)>& leaf_value,
    const std::function<double(const Node*, double, double)>& branch_value);

struct FlatCell {
  DyadicInterval cell;
  std::array<double, 4> vals;
};

// Left-to-right leaf walk. Errors if more than max_cells leaves or if a leaf
// sits deeper than DyadicInterval::kMaxGen.
std::vector<FlatCell> flatten(const NodePtr& root, std::size_t max_cells);

// Martingale tree of up to four components over [0,1).
class AdaptiveTree {
 public:
  static constexpr int kDefaultDepthCap = 40;

  AdaptiveTree() = default;
  explicit AdaptiveTree(NodePtr root, int depth_cap = kDefaultDepthCap);

  int dim() const;
  int depth_cap() const { return depth_cap_; }
  const NodePtr& root() const { return root_; }

  std::vector<double> average(const DyadicInterval& I) const;

  // Componentwise <.>_{I+} - <.>_I where I+ is the right half.
  std::vector<double> haar_coeff(const DyadicInterval& I) const;

  // Tree equal to (haar_coeff) * (indicator of right half - indicator of
  // left half) on I and zero elsewhere.
  AdaptiveTree martingale_diff(const DyadicInterval& I) const;

  struct RearrangePair {
    DyadicInterval source;
    DyadicInterval target;
  };

  // Piecewise translation: the values on source_i are moved to target_i.
  // Requires equal measure per pair, pairwise disjoint sources, pairwise
  // disjoint targets, and identical unions of the two families.
  AdaptiveTree compose_rearrangement(const std::vector<RearrangePair>& plan) const;

  // Componentwise integral over [a,b) clipped to [0,1).
  std::vector<double> integral(double a, double b) const;

  std::string to_json() const;
  static AdaptiveTree from_json(const std::string& text,
                                int depth_cap = kDefaultDepthCap);

 private:
  NodePtr root_;
  int depth_cap_ = kDefaultDepthCap;
};

}  // namespace cexlab
