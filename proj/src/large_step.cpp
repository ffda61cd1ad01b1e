#include "cexlab/large_step.hpp"

#include <cmath>
#include <utility>

#include "cexlab/characteristics.hpp"
#include "cexlab/numerics.hpp"

namespace cexlab {

LargeStepParams make_large_step_params(double p, double M) {
  require(p > 1.0, "exponent must exceed 1");
  require(M > 2.0, "characteristic target must exceed 2");
  LargeStepParams params;
  params.p = p;
  params.M = M;
  params.beta = 1.0 - 1.0 / (2.0 * M * std::exp(1.0));
  require(params.beta > 0.5 && params.beta < 1.0, "beta escaped (1/2, 1)");
  KahanSum partial;
  int n = 0;
  for (;; ++n) {
    require(n < 1 << 20, "truncation index search did not converge");
    partial.add(std::pow(2.0, n * (params.beta - 1.0)));
    if (partial.value() >= M) break;
  }
  params.N = n;
  return params;
}

double infinite_w_average(const LargeStepParams& params, int n) {
  return std::pow(2.0, n * params.beta) /
         (std::pow(2.0, 1.0 - params.beta) - 1.0);
}

double infinite_sigma_average(const LargeStepParams& params, int n) {
  double gamma = params.beta / (params.p - 1.0);
  return std::pow(2.0, -n * gamma) / (std::pow(2.0, gamma + 1.0) - 1.0);
}

HyperbolaPoints large_step_tail(const LargeStepParams& params) {
  double x = infinite_w_average(params, params.N + 1);
  double y = infinite_sigma_average(params, params.N + 1);
  HyperbolaPoints s = lower_hyperbola_solve(x, y, params.p);
  // Solver convention is a1 >= a2; the weight wants the smaller value on the
  // right half so haar_{I_{N+1}}(w) = (a1 - a2)/2 < 0.
  return {s.a2, s.b2, s.a1, s.b1};
}

AdaptiveTree build_weights(const LargeStepParams& params) {
  require(params.N + 2 <= AdaptiveTree::kDefaultDepthCap,
          "weight partition deeper than the tree cap");
  HyperbolaPoints tail = large_step_tail(params);
  double gamma = params.beta / (params.p - 1.0);
  NodePtr acc = make_branch(make_leaf({tail.a2, tail.b2}),   // I_{N+2}
                            make_leaf({tail.a1, tail.b1}));  // J_{N+2}
  for (int n = params.N + 1; n >= 1; --n) {
    NodePtr jn = make_leaf(
        {std::pow(2.0, n * params.beta), std::pow(2.0, -n * gamma)});
    acc = make_branch(acc, jn);
  }
  return AdaptiveTree(acc);
}

namespace {

// Rebuild the weight comb with (f, g) attached; fill_f(n) gives the f-subtree
// for the J_n leaf (n <= N+1), tail_f the constant value below truncation.
NodePtr attach_pair(const NodePtr& wnode, int gen, int N,
                    const std::function<NodePtr(const Node*, int)>& fill_f,
                    double tail_f) {
  require(!wnode->is_leaf(), "weight comb ended before the truncation depth");
  const Node* left = wnode->l.get();
  const Node* right = wnode->r.get();
  NodePtr new_left, new_right;
  if (gen == N + 1) {
    require(left->is_leaf() && right->is_leaf(),
            "weight comb deeper than its declared truncation");
    new_left = make_leaf({left->v(0), left->v(1), tail_f, -left->v(0)});
    new_right = make_leaf({right->v(0), right->v(1), tail_f, -right->v(0)});
  } else {
    new_left = attach_pair(wnode->l, gen + 1, N, fill_f, tail_f);
    new_right = fill_f(right, gen + 1);
  }
  return make_branch(new_left, new_right);
}

}  // namespace

AdaptiveTree build_mult_pair(const LargeStepParams& params,
                             const AdaptiveTree& weights) {
  require(weights.dim() == 2, "expected a (w, sigma) tree");
  // Average of the untruncated alternating pattern over I_{N+1}.
  double tail_f = (params.N % 2 == 0 ? -1.0 : 1.0) / 3.0;
  auto fill_f = [](const Node* jn, int n) {
    double f = (n % 2 == 1) ? 1.0 : -1.0;
    return make_leaf({jn->v(0), jn->v(1), f, -jn->v(0)});
  };
  return AdaptiveTree(attach_pair(weights.root(), 0, params.N, fill_f, tail_f),
                      weights.depth_cap());
}

AdaptiveTree build_shift_pair(const LargeStepParams& params,
                              const AdaptiveTree& weights) {
  require(weights.dim() == 2, "expected a (w, sigma) tree");
  auto fill_f = [](const Node* jn, int) {
    return make_branch(make_leaf({jn->v(0), jn->v(1), -1.0, -jn->v(0)}),
                       make_leaf({jn->v(0), jn->v(1), 1.0, -jn->v(0)}));
  };
  return AdaptiveTree(attach_pair(weights.root(), 0, params.N, fill_f, 0.0),
                      weights.depth_cap());
}

namespace {

double child_haar(const NodePtr& child, int c) {
  return child->is_leaf() ? 0.0 : node_haar(child.get(), c);
}

}  // namespace

double damage_mult_components(const NodePtr& root, int comp_f, int comp_g) {
  return memo_fold(
      root, [](const Node*) { return 0.0; },
      [comp_f, comp_g](const Node* n, double l, double r) {
        return std::fabs(node_haar(n, comp_f)) *
                   std::fabs(node_haar(n, comp_g)) +
               0.5 * (l + r);
      });
}

double damage_mult(const AdaptiveTree& quad) {
  require(quad.dim() == 4, "damage forms need a (w, sigma, f, g) quad");
  return damage_mult_components(quad.root(), kCompF, kCompG);
}

double damage_mult(const AdaptiveTree& f, const AdaptiveTree& g) {
  AdaptiveTree joint = tree_zip(f, g);
  return damage_mult_components(joint.root(), 0, f.dim());
}

double damage_shift_components(const NodePtr& root, int comp_f, int comp_g) {
  return memo_fold(
      root, [](const Node*) { return 0.0; },
      [comp_f, comp_g](const Node* n, double l, double r) {
        double term = node_haar(n, comp_g) *
                      (child_haar(n->r, comp_f) - child_haar(n->l, comp_f));
        return term + 0.5 * (l + r);
      });
}

double damage_shift(const AdaptiveTree& quad) {
  require(quad.dim() == 4, "damage forms need a (w, sigma, f, g) quad");
  return damage_shift_components(quad.root(), kCompF, kCompG);
}

double damage_shift(const AdaptiveTree& f, const AdaptiveTree& g) {
  AdaptiveTree joint = tree_zip(f, g);
  return damage_shift_components(joint.root(), 0, f.dim());
}

namespace {

struct CapKey {
  const Node* n;
  int left;
  bool operator==(const CapKey&) const = default;
};

struct CapHash {
  std::size_t operator()(const CapKey& k) const {
    return std::hash<const void*>{}(k.n) * 1000003u + std::size_t(k.left);
  }
};

double capped_fold(const Node* n, int left,
                   const std::function<double(const Node*)>& term,
                   std::unordered_map<CapKey, double, CapHash>& memo) {
  if (left <= 0 || n->is_leaf()) return 0.0;
  CapKey key{n, left};
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  double v = term(n) + 0.5 * (capped_fold(n->l.get(), left - 1, term, memo) +
                              capped_fold(n->r.get(), left - 1, term, memo));
  memo.emplace(key, v);
  return v;
}

}  // namespace

double damage_mult_capped(const NodePtr& root, int comp_f, int comp_g,
                          int gen_limit) {
  require(gen_limit >= 0 && gen_limit <= DyadicInterval::kMaxGen,
          "generation limit out of range");
  std::unordered_map<CapKey, double, CapHash> memo;
  auto term = [comp_f, comp_g](const Node* n) {
    return std::fabs(node_haar(n, comp_f)) * std::fabs(node_haar(n, comp_g));
  };
  return capped_fold(root.get(), gen_limit, term, memo);
}

double damage_shift_capped(const NodePtr& root, int comp_f, int comp_g,
                           int gen_limit) {
  require(gen_limit >= 0 && gen_limit <= DyadicInterval::kMaxGen,
          "generation limit out of range");
  std::unordered_map<CapKey, double, CapHash> memo;
  auto term = [comp_f, comp_g](const Node* n) {
    return node_haar(n, comp_g) *
           (child_haar(n->r, comp_f) - child_haar(n->l, comp_f));
  };
  return capped_fold(root.get(), gen_limit, term, memo);
}

}  // namespace cexlab
