#include "cexlab/small_step.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

#include "cexlab/error.hpp"

namespace cexlab {

int default_generic_cap(int d) { return 8 * d * d + 16; }
int default_triangle_cap(int d) { return 8 * (2 * d) * (2 * d) + 16; }

namespace {

void check_order(int d) {
  if (d < 1) fail("walk order d must be >= 1");
}

void check_cap(int gens_cap) {
  if (gens_cap < 0) fail("generation cap must be >= 0");
}

}  // namespace

GenericMasses generic_walk_masses(int d, int gens_cap) {
  check_order(d);
  check_cap(gens_cap);
  GenericMasses m;
  // cur[s + d] = relative measure of in-flight walk cells in state s.
  std::vector<double> cur(2 * d + 1, 0.0), next;
  cur[d] = 1.0;
  for (int t = 0; t < gens_cap; ++t) {
    double alive = 0;
    for (double x : cur) alive += x;
    if (alive == 0) break;
    m.intermediate += alive;
    next.assign(cur.size(), 0.0);
    for (int s = -d + 1; s <= d - 1; ++s) {
      double half = 0.5 * cur[s + d];
      if (half == 0) continue;
      if (s - 1 == -d)
        m.minus += half;
      else
        next[s - 1 + d] += half;
      if (s + 1 == d)
        m.plus += half;
      else
        next[s + 1 + d] += half;
    }
    cur.swap(next);
  }
  for (double x : cur) m.leftover += x;
  return m;
}

double intermediate_mass(const DyadicInterval& I, int d, int gens_cap) {
  return I.measure() * generic_walk_masses(d, gens_cap).intermediate;
}

StoppingFamily stopping_family(const DyadicInterval& I, int d, int gens_cap,
                               std::size_t list_limit) {
  check_order(d);
  check_cap(gens_cap);
  if (I.gen + gens_cap > DyadicInterval::kMaxGen)
    fail("stopping_family: cap descends past representable generations; "
         "use generic_walk_masses for mass-only queries");
  StoppingFamily fam;
  fam.d = d;
  GenericMasses m = generic_walk_masses(d, gens_cap);
  double scale = I.measure();
  fam.mass_minus = scale * m.minus;
  fam.mass_plus = scale * m.plus;
  fam.mass_leftover = scale * m.leftover;

  struct Cell {
    DyadicInterval J;
    int s, gens_left;
  };
  std::deque<Cell> work{{I, 0, gens_cap}};
  std::size_t listed = 0;
  while (!work.empty()) {
    Cell c = work.front();
    work.pop_front();
    if (++listed > list_limit) {
      fam.lists_complete = false;
      fam.minus.clear();
      fam.plus.clear();
      fam.leftover.clear();
      break;
    }
    if (c.s == -d) {
      fam.minus.push_back(c.J);
    } else if (c.s == d) {
      fam.plus.push_back(c.J);
    } else if (c.gens_left == 0) {
      fam.leftover.push_back({c.J, {c.s, 0}});
    } else {
      work.push_back({c.J.left(), c.s - 1, c.gens_left - 1});
      work.push_back({c.J.right(), c.s + 1, c.gens_left - 1});
    }
  }
  return fam;
}

// ---------------------------------------------------------------------------
// Generic transform.

namespace {

struct GenericRegion {
  int d, dim;
  std::array<double, 4> a{}, h{};
  NodePtr tminus, tplus;
  std::unordered_map<std::int64_t, NodePtr> memo;

  NodePtr frozen_leaf(int s) const {
    std::vector<double> vals(static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; ++c)
      vals[static_cast<std::size_t>(c)] = a[c] + s * h[c] / d;
    return make_leaf(vals, /*frozen=*/true);
  }

  NodePtr cell(int s, int g) {
    if (s == -d) return tminus;
    if (s == d) return tplus;
    if (g <= 0) return frozen_leaf(s);
    std::int64_t key = (static_cast<std::int64_t>(s + d) << 32) | g;
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    NodePtr res = make_branch(cell(s - 1, g - 1), cell(s + 1, g - 1));
    memo.emplace(key, res);
    return res;
  }
};

NodePtr generic_transform_rec(const NodePtr& n, int d, int gens_cap) {
  if (n->is_leaf()) return n;
  GenericRegion reg;
  reg.d = d;
  reg.dim = n->dim;
  for (int c = 0; c < n->dim; ++c) {
    reg.a[c] = n->v(c);
    reg.h[c] = node_haar(n.get(), c);
  }
  reg.tminus = generic_transform_rec(n->l, d, gens_cap);
  reg.tplus = generic_transform_rec(n->r, d, gens_cap);
  return reg.cell(0, gens_cap);
}

}  // namespace

SmallStepResult small_step_transform(const AdaptiveTree& in, int d,
                                     int gens_cap) {
  check_order(d);
  if (gens_cap < 0) gens_cap = default_generic_cap(d);
  if (!in.root()) fail("small_step_transform: empty tree");
  NodePtr out = generic_transform_rec(in.root(), d, gens_cap);
  return {AdaptiveTree(out), frozen_mass(out)};
}

// ---------------------------------------------------------------------------
// Triangle variant.

namespace {

// Position of a lattice state within the triangle (-d,0), (d,2d), (d,-2d).
enum class TriMode { kVertexMinus, kVertexPP, kVertexPM, kBase, kUpper, kLower, kInterior };

TriMode tri_mode(int u, int v, int d) {
  if (u == -d && v == 0) return TriMode::kVertexMinus;
  if (u == d && v == 2 * d) return TriMode::kVertexPP;
  if (u == d && v == -2 * d) return TriMode::kVertexPM;
  if (u == d) return TriMode::kBase;
  if (v == u + d) return TriMode::kUpper;
  if (v == -(u + d)) return TriMode::kLower;
  return TriMode::kInterior;
}

struct TriangleRegion {
  int d, dim;
  std::array<double, 4> a{}, h1{}, h2{};
  NodePtr tminus, tpp, tpm;
  std::unordered_map<std::int64_t, NodePtr> memo;

  double lattice_value(int u, int v, int c) const {
    return a[c] + u * h1[c] / d + v * h2[c] / (2.0 * d);
  }

  NodePtr frozen_leaf(int u, int v) const {
    std::vector<double> vals(static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; ++c)
      vals[static_cast<std::size_t>(c)] = lattice_value(u, v, c);
    return make_leaf(vals, /*frozen=*/true);
  }

  // State cells cache the lattice closed form instead of the children's
  // midpoint: (u, v) are martingale coordinates, so the closed form is the
  // exact average, and components with h2 = 0 get bitwise-equal values
  // across v. Midpoint rollups would drift by ulps per generation and leave
  // spurious odd-generation Haar coefficients on the non-splitting
  // components.
  NodePtr branch_at(int u, int v, NodePtr l, NodePtr r) const {
    auto n = std::make_shared<Node>();
    n->l = std::move(l);
    n->r = std::move(r);
    n->dim = static_cast<std::uint8_t>(dim);
    n->depth = 1 + std::max(n->l->depth, n->r->depth);
    for (int c = 0; c < dim; ++c) n->vals[static_cast<std::size_t>(c)] = lattice_value(u, v, c);
    return n;
  }

  NodePtr cell(int u, int v, int g) {
    switch (tri_mode(u, v, d)) {
      case TriMode::kVertexMinus:
        return tminus;
      case TriMode::kVertexPP:
        return tpp;
      case TriMode::kVertexPM:
        return tpm;
      default:
        break;
    }
    if (g < 2) return frozen_leaf(u, v);
    std::int64_t key = ((static_cast<std::int64_t>(u + d) * (4 * d + 1) +
                         (v + 2 * d))
                        << 32) |
                       g;
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    auto pairnode = [&](int uu, int vv) {
      NodePtr c = cell(uu, vv, g - 2);
      return make_branch(c, c);
    };
    NodePtr res;
    switch (tri_mode(u, v, d)) {
      case TriMode::kBase:
        res = branch_at(u, v, pairnode(d, v - 1), pairnode(d, v + 1));
        break;
      case TriMode::kUpper:
        res = branch_at(u, v, pairnode(u - 1, v - 1), pairnode(u + 1, v + 1));
        break;
      case TriMode::kLower:
        res = branch_at(u, v, pairnode(u - 1, v + 1), pairnode(u + 1, v - 1));
        break;
      default:  // interior: only the right intermediate splits in value
        res = branch_at(u, v, pairnode(u - 1, v),
                        make_branch(cell(u + 1, v - 1, g - 2),
                                    cell(u + 1, v + 1, g - 2)));
        break;
    }
    memo.emplace(key, res);
    return res;
  }
};

NodePtr triangle_transform_rec(const NodePtr& n, int d, int gens_cap) {
  if (n->is_leaf()) return n;
  TriangleRegion reg;
  reg.d = d;
  reg.dim = n->dim;
  if (n->r->is_leaf()) {
    reg.tpp = n->r;
    reg.tpm = n->r;
  } else {
    if (!n->r->l->is_leaf() || !n->r->r->is_leaf())
      fail("triangle transform needs the right child constant on its children");
    reg.tpp = n->r->r;
    reg.tpm = n->r->l;
    for (int c = 0; c < n->dim; ++c) reg.h2[c] = node_haar(n->r.get(), c);
  }
  for (int c = 0; c < n->dim; ++c) {
    reg.a[c] = n->v(c);
    reg.h1[c] = node_haar(n.get(), c);
  }
  reg.tminus = triangle_transform_rec(n->l, d, gens_cap);
  return reg.cell(0, 0, gens_cap & ~1);
}

}  // namespace

TriangleResult small_step_triangle_transform(const AdaptiveTree& in, int d,
                                             int gens_cap) {
  check_order(d);
  if (gens_cap < 0) gens_cap = default_triangle_cap(d);
  if (!in.root()) fail("triangle transform: empty tree");
  NodePtr out = triangle_transform_rec(in.root(), d, gens_cap);
  return {AdaptiveTree(out), frozen_mass(out)};
}

TriangleMasses triangle_walk_masses(int d, int gens_cap) {
  check_order(d);
  check_cap(gens_cap);
  TriangleMasses m;
  // cur[(u + d) * (4d + 1) + (v + 2d)] = in-flight measure at (u, v).
  int nu = 2 * d + 1, nv = 4 * d + 1;
  std::vector<double> cur(static_cast<std::size_t>(nu) * nv, 0.0), next;
  auto at = [&](std::vector<double>& vec, int u, int v) -> double& {
    return vec[static_cast<std::size_t>(u + d) * nv + (v + 2 * d)];
  };
  at(cur, 0, 0) = 1.0;
  for (int t = 0; t + 2 <= gens_cap; t += 2) {
    next.assign(cur.size(), 0.0);
    bool alive = false;
    auto deposit = [&](int u, int v, double mass) {
      switch (tri_mode(u, v, d)) {
        case TriMode::kVertexMinus:
          m.minus += mass;
          return;
        case TriMode::kVertexPP:
          m.plus_plus += mass;
          return;
        case TriMode::kVertexPM:
          m.plus_minus += mass;
          return;
        default:
          at(next, u, v) += mass;
      }
    };
    for (int u = -d; u <= d; ++u) {
      for (int v = -2 * d; v <= 2 * d; ++v) {
        double mass = at(cur, u, v);
        if (mass == 0) continue;
        alive = true;
        switch (tri_mode(u, v, d)) {
          case TriMode::kBase:
            deposit(d, v - 1, 0.5 * mass);
            deposit(d, v + 1, 0.5 * mass);
            break;
          case TriMode::kUpper:
            deposit(u - 1, v - 1, 0.5 * mass);
            deposit(u + 1, v + 1, 0.5 * mass);
            break;
          case TriMode::kLower:
            deposit(u - 1, v + 1, 0.5 * mass);
            deposit(u + 1, v - 1, 0.5 * mass);
            break;
          default:
            m.interior_visits += mass;
            deposit(u - 1, v, 0.5 * mass);
            deposit(u + 1, v - 1, 0.25 * mass);
            deposit(u + 1, v + 1, 0.25 * mass);
            break;
        }
      }
    }
    cur.swap(next);
    if (!alive) break;
  }
  for (double x : cur) m.leftover += x;
  return m;
}

StoppingFamily triangle_stopping(const DyadicInterval& I, int d, int gens_cap,
                                 std::size_t list_limit) {
  check_order(d);
  check_cap(gens_cap);
  if (I.gen + gens_cap > DyadicInterval::kMaxGen)
    fail("triangle_stopping: cap descends past representable generations; "
         "use triangle_walk_masses for mass-only queries");
  StoppingFamily fam;
  fam.d = d;
  TriangleMasses m = triangle_walk_masses(d, gens_cap);
  double scale = I.measure();
  fam.mass_minus = scale * m.minus;
  fam.mass_plus_plus = scale * m.plus_plus;
  fam.mass_plus_minus = scale * m.plus_minus;
  fam.mass_plus = fam.mass_plus_plus + fam.mass_plus_minus;
  fam.mass_leftover = scale * m.leftover;

  struct Cell {
    DyadicInterval J;
    int u, v, gens_left;
  };
  std::deque<Cell> work{{I, 0, 0, gens_cap & ~1}};
  std::size_t listed = 0;
  while (!work.empty()) {
    Cell c = work.front();
    work.pop_front();
    if (++listed > list_limit) {
      fam.lists_complete = false;
      fam.minus.clear();
      fam.plus_plus.clear();
      fam.plus_minus.clear();
      fam.leftover.clear();
      break;
    }
    // Both grandchildren under K inherit one state.
    auto push2 = [&](const DyadicInterval& K, int u, int v) {
      work.push_back({K.left(), u, v, c.gens_left - 2});
      work.push_back({K.right(), u, v, c.gens_left - 2});
    };
    TriMode mode = tri_mode(c.u, c.v, d);
    if (mode == TriMode::kVertexMinus) {
      fam.minus.push_back(c.J);
    } else if (mode == TriMode::kVertexPP) {
      fam.plus_plus.push_back(c.J);
    } else if (mode == TriMode::kVertexPM) {
      fam.plus_minus.push_back(c.J);
    } else if (c.gens_left < 2) {
      fam.leftover.push_back({c.J, {c.u, c.v}});
    } else if (mode == TriMode::kBase) {
      push2(c.J.left(), d, c.v - 1);
      push2(c.J.right(), d, c.v + 1);
    } else if (mode == TriMode::kUpper) {
      push2(c.J.left(), c.u - 1, c.v - 1);
      push2(c.J.right(), c.u + 1, c.v + 1);
    } else if (mode == TriMode::kLower) {
      push2(c.J.left(), c.u - 1, c.v + 1);
      push2(c.J.right(), c.u + 1, c.v - 1);
    } else {
      push2(c.J.left(), c.u - 1, c.v);
      work.push_back({c.J.right().left(), c.u + 1, c.v - 1, c.gens_left - 2});
      work.push_back({c.J.right().right(), c.u + 1, c.v + 1, c.gens_left - 2});
    }
  }
  fam.plus = fam.plus_plus;
  fam.plus.insert(fam.plus.end(), fam.plus_minus.begin(), fam.plus_minus.end());
  return fam;
}

double max_abs_haar_odd_generation(const NodePtr& root, int comp) {
  if (!root) return 0.0;
  struct Key {
    const Node* n;
    int par;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::hash<const Node*>()(k.n) * 31 + static_cast<std::size_t>(k.par);
    }
  };
  std::unordered_map<Key, double, KeyHash> done;
  std::vector<std::pair<Key, bool>> stack{{{root.get(), 0}, false}};
  while (!stack.empty()) {
    auto [key, expanded] = stack.back();
    stack.pop_back();
    if (done.count(key)) continue;
    if (!key.n->l) {
      done[key] = 0.0;
      continue;
    }
    Key kl{key.n->l.get(), key.par ^ 1}, kr{key.n->r.get(), key.par ^ 1};
    if (!expanded) {
      stack.push_back({key, true});
      stack.push_back({kl, false});
      stack.push_back({kr, false});
      continue;
    }
    double own = key.par == 1 ? std::abs(node_haar(key.n, comp)) : 0.0;
    done[key] = std::max({own, done[kl], done[kr]});
  }
  return done[{root.get(), 0}];
}

}  // namespace cexlab
