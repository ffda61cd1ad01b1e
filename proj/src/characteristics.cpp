#include "cexlab/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cexlab/numerics.hpp"

namespace cexlab {

namespace {

void require_positive_leaves(const NodePtr& root, int comp) {
  memo_fold(
      root,
      [comp](const Node* n) {
        require(n->vals[comp] > 0.0, "weight leaves must be positive");
        return 0.0;
      },
      [](const Node*, double, double) { return 0.0; });
}

}  // namespace

ApResult ap_dyadic_components(const NodePtr& root, int comp_w, int comp_sigma,
                              double p) {
  require(p > 1.0, "exponent must exceed 1");
  require_positive_leaves(root, comp_w);
  require_positive_leaves(root, comp_sigma);
  auto local = [&](const Node* n) {
    return n->vals[comp_w] * std::pow(n->vals[comp_sigma], p - 1.0);
  };
  auto memo = memo_fold_map(
      root, local,
      [&](const Node* n, double l, double r) {
        return std::max(local(n), std::max(l, r));
      });
  double sup = memo.at(root.get());

  // Minimal depth (within each subtree) of a node attaining the sup. A
  // breadth-first scan would visit every sup-attaining path, and rearranged
  // trees attain the sup at thousands of congruent cells; this walk is
  // O(depth) after the memo pass.
  constexpr double kUnattained = std::numeric_limits<double>::infinity();
  auto min_depth = memo_fold_map(
      root, [&](const Node* n) { return local(n) == sup ? 0.0 : kUnattained; },
      [&](const Node* n, double l, double r) {
        if (local(n) == sup) return 0.0;
        return 1.0 + std::min(l, r);
      });
  const Node* n = root.get();
  DyadicInterval cell{};
  while (min_depth.at(n) != 0.0) {
    require(!n->is_leaf(), "characteristic argmax not found");
    // Cells below kMaxGen generations are not representable; the sup is still
    // exact, and the reported cell is the deepest representable ancestor.
    if (cell.gen >= DyadicInterval::kMaxGen) break;
    // Prefer the left child on ties: smallest generation, then smallest index.
    if (min_depth.at(n->l.get()) <= min_depth.at(n->r.get())) {
      n = n->l.get();
      cell = cell.left();
    } else {
      n = n->r.get();
      cell = cell.right();
    }
  }
  return {sup, cell};
}

ApResult ap_dyadic(const AdaptiveTree& w, const AdaptiveTree& sigma, double p) {
  require(w.dim() == 1 && sigma.dim() == 1, "expected scalar weight trees");
  AdaptiveTree joint = tree_zip(w, sigma);
  return ap_dyadic_components(joint.root(), 0, 1, p);
}

namespace {

struct PairKey {
  const Node* a;
  const Node* b;
  bool operator==(const PairKey&) const = default;
};

struct PairHash {
  std::size_t operator()(const PairKey& k) const {
    auto h1 = std::hash<const void*>{}(k.a);
    auto h2 = std::hash<const void*>{}(k.b);
    return h1 ^ (h2 * 0x9e3779b97f4a7c15ULL);
  }
};

double ratio(double a, double b) { return a > b ? a / b : b / a; }

class StrongSmoothness {
 public:
  StrongSmoothness(int comp) : comp_(comp) {}

  double within(const Node* n) {
    if (n->is_leaf()) return 1.0;
    auto it = within_memo_.find(n);
    if (it != within_memo_.end()) return it->second;
    double v = ratio(n->l->vals[comp_], n->r->vals[comp_]);
    v = std::max(v, within(n->l.get()));
    v = std::max(v, within(n->r.get()));
    v = std::max(v, cross(n->l.get(), n->r.get()));
    within_memo_.emplace(n, v);
    return v;
  }

  // Pairs of adjacent equal-length cells straddling the boundary between the
  // cell of a (left) and the cell of b (right); leaves extend as constants,
  // so two leaves end the descent.
  double cross(const Node* a, const Node* b) {
    double r0 = ratio(a->vals[comp_], b->vals[comp_]);
    if (a->is_leaf() && b->is_leaf()) return r0;
    PairKey key{a, b};
    auto it = cross_memo_.find(key);
    if (it != cross_memo_.end()) return std::max(r0, it->second);
    const Node* ar = a->is_leaf() ? a : a->r.get();
    const Node* bl = b->is_leaf() ? b : b->l.get();
    double deeper = cross(ar, bl);
    cross_memo_.emplace(key, deeper);
    return std::max(r0, deeper);
  }

 private:
  int comp_;
  std::unordered_map<const Node*, double> within_memo_;
  std::unordered_map<PairKey, double, PairHash> cross_memo_;
};

}  // namespace

double smoothness_component(const NodePtr& root, int comp, SmoothnessKind kind) {
  require_positive_leaves(root, comp);
  if (kind == SmoothnessKind::kDyadic) {
    return memo_fold(
        root, [](const Node*) { return 1.0; },
        [comp](const Node* n, double l, double r) {
          return std::max(ratio(n->l->vals[comp], n->r->vals[comp]),
                          std::max(l, r));
        });
  }
  StrongSmoothness s(comp);
  return s.within(root.get());
}

double smoothness(const AdaptiveTree& w, SmoothnessKind kind) {
  return smoothness_component(w.root(), 0, kind);
}

double doubling_component(const NodePtr& root, int comp) {
  require_positive_leaves(root, comp);
  return memo_fold(
      root, [](const Node*) { return 2.0; },
      [comp](const Node* n, double l, double r) {
        double a = n->vals[comp];
        double local = 2.0 * a / std::min(n->l->vals[comp], n->r->vals[comp]);
        return std::max(local, std::max(l, r));
      });
}

double weighted_norm_components(const NodePtr& root, int comp_bold,
                                int comp_weight, double q) {
  require(q > 1.0, "norm exponent must exceed 1");
  double mass = memo_fold(
      root,
      [&](const Node* n) {
        double w = n->vals[comp_weight];
        require(w > 0.0, "norm weight leaves must be positive");
        return std::pow(std::fabs(n->vals[comp_bold] / w), q) * w;
      },
      [](const Node*, double l, double r) { return 0.5 * (l + r); });
  return std::pow(mass, 1.0 / q);
}

double weighted_norm(const AdaptiveTree& bold, const AdaptiveTree& weight,
                     double q) {
  require(bold.dim() == 1 && weight.dim() == 1, "expected scalar trees");
  AdaptiveTree joint = tree_zip(bold, weight);
  return weighted_norm_components(joint.root(), 0, 1, q);
}

namespace {

NodePtr zip_rec(const NodePtr& a, const NodePtr& b,
                std::unordered_map<PairKey, NodePtr, PairHash>& memo) {
  PairKey key{a.get(), b.get()};
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  NodePtr out;
  if (a->is_leaf() && b->is_leaf()) {
    std::vector<double> vals(a->vals.begin(), a->vals.begin() + a->dim);
    vals.insert(vals.end(), b->vals.begin(), b->vals.begin() + b->dim);
    out = make_leaf(vals, a->frozen || b->frozen);
  } else {
    const NodePtr& al = a->is_leaf() ? a : a->l;
    const NodePtr& ar = a->is_leaf() ? a : a->r;
    const NodePtr& bl = b->is_leaf() ? b : b->l;
    const NodePtr& br = b->is_leaf() ? b : b->r;
    out = make_branch(zip_rec(al, bl, memo), zip_rec(ar, br, memo));
  }
  memo.emplace(key, out);
  return out;
}

}  // namespace

AdaptiveTree tree_zip(const AdaptiveTree& a, const AdaptiveTree& b) {
  require(a.dim() + b.dim() <= 4, "zipped tree exceeds four components");
  std::unordered_map<PairKey, NodePtr, PairHash> memo;
  return AdaptiveTree(zip_rec(a.root(), b.root(), memo),
                      std::max(a.depth_cap(), b.depth_cap()));
}

PoissonProbe poisson_vs_average(const StepFunctionR& w, double lambda_re,
                                double lambda_im, double p) {
  require(lambda_im > 0.0, "probe point must lie in the upper half plane");
  require(p > 1.0, "exponent must exceed 1");
  w.validate();
  PoissonProbe probe;
  probe.lambda_re = lambda_re;
  probe.lambda_im = lambda_im;
  const double t = lambda_im, a = lambda_re;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.vs.size(); ++i) {
    if (w.vs[i] == 0.0) continue;
    double x0 = w.xs[i], x1 = w.xs[i + 1];
    double piece;
    if (p == 2.0) {
      piece = std::atan((x1 - a) / t) - std::atan((x0 - a) / t);
    } else {
      piece = integrate(
          [&](double x) {
            double r2 = (x - a) * (x - a) + t * t;
            return std::pow(t, p - 1.0) / std::pow(r2, 0.5 * p);
          },
          x0, x1, 1e-10);
    }
    acc += w.vs[i] * piece;
  }
  probe.poisson = acc;
  probe.average = w.integral(a - t, a + t) / (2.0 * t);
  return probe;
}

double sampled_continuous_char(const StepFunctionR& w, const StepFunctionR& sigma,
                               double p, int samples, std::uint64_t seed) {
  require(p > 1.0, "exponent must exceed 1");
  w.validate();
  sigma.validate();
  double lo = w.xs.front(), hi = w.xs.back();
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double span = hi - lo;
  double sup = 0.0;
  for (int i = 0; i < samples; ++i) {
    double len = span * std::exp(std::log(1e-4) * u(rng));  // [1e-4, 1] x span
    double a = lo + u(rng) * (span - len);
    double prod = w.average(a, a + len) *
                  std::pow(sigma.average(a, a + len), p - 1.0);
    sup = std::max(sup, prod);
  }
  return sup;
}

WeightsReport measure_weights(const AdaptiveTree& quad, double p) {
  require(quad.dim() >= 2, "weights tree needs w and sigma components");
  WeightsReport rep;
  rep.p = p;
  rep.ap = ap_dyadic_components(quad.root(), kCompW, kCompSigma, p);
  rep.s_dyadic_w = smoothness_component(quad.root(), kCompW, SmoothnessKind::kDyadic);
  rep.s_strong_w =
      smoothness_component(quad.root(), kCompW, SmoothnessKind::kStrongDyadic);
  rep.s_dyadic_sigma =
      smoothness_component(quad.root(), kCompSigma, SmoothnessKind::kDyadic);
  rep.s_strong_sigma =
      smoothness_component(quad.root(), kCompSigma, SmoothnessKind::kStrongDyadic);
  rep.doubling_w = doubling_component(quad.root(), kCompW);
  rep.doubling_sigma = doubling_component(quad.root(), kCompSigma);
  rep.mass_w = quad.root()->vals[kCompW];
  rep.mass_sigma = quad.root()->vals[kCompSigma];
  rep.leftover = frozen_mass(quad.root());
  return rep;
}

}  // namespace cexlab
