#include "cexlab/remodel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "cexlab/error.hpp"

namespace cexlab {

namespace {

std::array<NodePtr, 2> kids(const NodePtr& n) {
  if (n->is_leaf()) return {n, n};
  return {n->l, n->r};
}

std::array<NodePtr, 4> grandkids(const NodePtr& n) {
  auto [l, r] = kids(n);
  auto [ll, lr] = kids(l);
  auto [rl, rr] = kids(r);
  return {ll, lr, rl, rr};
}

std::vector<double> vals_of(const Node* n, int dim) {
  return std::vector<double>(n->vals.begin(), n->vals.begin() + dim);
}

NodePtr balanced(std::vector<NodePtr> cells) {
  for (std::size_t len = cells.size(); len > 1; len /= 2)
    for (std::size_t t = 0; t < len / 2; ++t)
      cells[t] = make_branch(cells[2 * t], cells[2 * t + 1]);
  return cells[0];
}

// Grid with excL on the leftmost of 2^N cells, excR on the rightmost and a
// shared copy of reg everywhere else, in O(N) nodes.
NodePtr qp_grid(const NodePtr& reg, const NodePtr& excL, const NodePtr& excR,
                int N) {
  if (N == 1) return make_branch(excL, excR);
  NodePtr P = reg, sl = excL, sr = excR;
  for (int j = 1; j < N; ++j) {
    sl = make_branch(sl, P);
    sr = make_branch(P, sr);
    if (j < N - 1) P = make_branch(P, P);
  }
  return make_branch(sl, sr);
}

NodePtr e4_avg(const NodePtr& f) {
  if (f->is_leaf()) return f;
  auto g = grandkids(f);
  int dim = f->dim;
  return make_branch(
      make_branch(make_leaf(vals_of(g[0].get(), dim)),
                  make_leaf(vals_of(g[1].get(), dim))),
      make_branch(make_leaf(vals_of(g[2].get(), dim)),
                  make_leaf(vals_of(g[3].get(), dim))));
}

NodePtr e2_avg(const NodePtr& f) {
  if (f->is_leaf()) return f;
  int dim = f->dim;
  return make_branch(make_leaf(vals_of(f->l.get(), dim)),
                     make_leaf(vals_of(f->r.get(), dim)));
}

}  // namespace

NodePtr periodise(const NodePtr& f, int N) {
  if (!f) fail("periodise: empty tree");
  if (N < 1 || N > 30) fail("periodise: frequency out of range");
  NodePtr out = f;
  for (int j = 0; j < N; ++j) out = make_branch(out, out);
  return out;
}

NodePtr second_diff(const NodePtr& f) {
  if (!f) fail("second_diff: empty tree");
  int dim = f->dim;
  if (f->is_leaf()) return make_leaf(std::vector<double>(dim, 0.0));
  auto g = grandkids(f);
  std::array<NodePtr, 4> leaves;
  for (int ij = 0; ij < 4; ++ij) {
    std::vector<double> d(dim);
    for (int c = 0; c < dim; ++c) d[c] = g[ij]->v(c) - f->v(c);
    leaves[ij] = make_leaf(d);
  }
  return make_branch(make_branch(leaves[0], leaves[1]),
                     make_branch(leaves[2], leaves[3]));
}

NodePtr quasi_periodise_avg(const NodePtr& f, int N) {
  if (!f) fail("quasi_periodise_avg: empty tree");
  if (N < 3 || N > 20) fail("quasi_periodise_avg: frequency out of range");
  NodePtr exc = make_leaf(vals_of(f.get(), f->dim));
  return qp_grid(e4_avg(f), exc, exc, N);
}

double qp_identity_residual(const NodePtr& f) {
  if (!f || f->is_leaf()) return 0.0;
  auto g = grandkids(f);
  double h0 = 0, hl = 0, hr = 0, worst = 0;
  for (int c = 0; c < f->dim; ++c) {
    h0 = node_haar(f.get(), c);
    hl = node_haar(f->l.get(), c);
    hr = node_haar(f->r.get(), c);
    double delta[4] = {-h0 - hl, -h0 + hl, h0 - hr, h0 + hr};
    for (int ij = 0; ij < 4; ++ij)
      worst = std::max(worst, std::abs((g[ij]->v(c) - f->v(c)) - delta[ij]));
  }
  return worst;
}

FrequencyPolicy uniform_frequency(int N) {
  return [N](const StartingInterval&) { return N; };
}

FrequencyPolicy scheduled_frequency(std::unordered_map<std::string, int> by_key,
                                    int default_N) {
  return [m = std::move(by_key), default_N](const StartingInterval& s) {
    auto it = m.find(s.cell.key());
    return it == m.end() ? default_N : it->second;
  };
}

namespace {

struct Region {
  StartingInterval meta;
  NodePtr s;
  std::vector<std::array<int, 4>> subs;  // per regular cell, next-step ids
  int chaseL = -1, chaseR = -1;
};

struct Seed {
  DyadicInterval J;
  NodePtr s;
  double fraction = 1.0;  // measure relative to the enclosing fresh starting
  bool chased = false;
  int parent = -1;
  int slot = 0;  // >=0: regular-cell grandchild slot; -1: excL; -2: excR
};

struct Builder {
  const FrequencyPolicy& freq;
  int K;
  RemodelCaps caps;
  std::vector<Region> regions;
  std::vector<std::vector<int>> step_ids;
  std::vector<RemodelStep> steps;
  double identity_err = 0;

  explicit Builder(const FrequencyPolicy& f, int K_, const RemodelCaps& c)
      : freq(f), K(K_), caps(c), step_ids(static_cast<std::size_t>(K_)),
        steps(static_cast<std::size_t>(K_)) {}

  void run(const NodePtr& root) {
    std::vector<Seed> next{{DyadicInterval{}, root, 1.0, false, -1, 0}};
    int rank = 0;
    for (int k = 1; k <= K; ++k) {
      std::stable_sort(next.begin(), next.end(),
                       [](const Seed& a, const Seed& b) { return a.J < b.J; });
      std::deque<Seed> work(next.begin(), next.end());
      next.clear();
      while (!work.empty()) {
        Seed sd = work.front();
        work.pop_front();
        if (static_cast<std::int64_t>(regions.size()) >= caps.max_starting)
          fail("remodel: starting-interval budget exhausted; coarsen "
               "chase_mass or lower K");
        int id = static_cast<int>(regions.size());
        regions.emplace_back();
        Region& r = regions.back();
        r.s = sd.s;
        r.meta.cell = sd.J;
        r.meta.step = k;
        r.meta.rank = rank++;
        r.meta.chased = sd.chased;
        r.meta.constant = sd.s->is_leaf();
        auto g = grandkids(sd.s);
        for (int c = 0; c < sd.s->dim; ++c) {
          r.meta.avg[c] = sd.s->v(c);
          for (int ij = 0; ij < 4; ++ij) r.meta.grand[ij][c] = g[ij]->v(c);
        }
        identity_err = std::max(identity_err, qp_identity_residual(sd.s));
        int N = freq(r.meta);
        if (N < 3 || N > 20) fail("remodel: frequency must be in [3, 20]");
        r.meta.N = N;
        if (sd.J.gen + N + 2 > caps.max_gen)
          fail("remodel: starting intervals descend past the generation cap; "
               "coarsen chase_mass or lower K");
        if (sd.parent >= 0) {
          Region& p = regions[static_cast<std::size_t>(sd.parent)];
          if (sd.slot == -1)
            p.chaseL = id;
          else if (sd.slot == -2)
            p.chaseR = id;
          else
            p.subs[static_cast<std::size_t>(sd.slot) / 4][sd.slot % 4] = id;
        }
        step_ids[k - 1].push_back(id);
        steps[k - 1].starting.push_back(r.meta);

        std::uint64_t base = sd.J.idx << N;
        int cells = 1 << N;
        for (int m = 1; m < cells - 1; ++m)
          steps[k - 1].regular.emplace_back(sd.J.gen + N, base + m);
        if (!r.meta.constant) {
          double child_fraction = sd.fraction * std::ldexp(1.0, -N);
          if (child_fraction >= caps.chase_mass) {
            work.push_back({DyadicInterval(sd.J.gen + N, base), sd.s,
                            child_fraction, true, id, -1});
            work.push_back(
                {DyadicInterval(sd.J.gen + N, base + cells - 1), sd.s,
                 child_fraction, true, id, -2});
          } else {
            steps[k - 1].defect += 2 * std::ldexp(sd.J.measure(), -N);
          }
        }
        if (k < K) {
          r.subs.assign(static_cast<std::size_t>(cells - 2), {-1, -1, -1, -1});
          int per_cell = caps.child_step ? 2 : 4;
          auto sub_contents = caps.child_step
                                  ? std::array<NodePtr, 4>{kids(sd.s)[0],
                                                           kids(sd.s)[1],
                                                           nullptr, nullptr}
                                  : g;
          for (int m = 1; m < cells - 1; ++m) {
            DyadicInterval R(sd.J.gen + N, base + m);
            for (int ij = 0; ij < per_cell; ++ij) {
              DyadicInterval sub =
                  caps.child_step
                      ? DyadicInterval(R.gen + 1, (R.idx << 1) + ij)
                      : DyadicInterval(R.gen + 2, (R.idx << 2) + ij);
              next.push_back({sub, sub_contents[static_cast<std::size_t>(ij)],
                              1.0, false, id, (m - 1) * 4 + ij});
            }
          }
        }
      }
    }
  }

  // avg_of[id][j] = content of X^j on the region's cell, j = 0..K.
  std::vector<NodePtr> full_of;
  std::vector<std::vector<NodePtr>> avg_of;

  void assemble() {
    full_of.assign(regions.size(), nullptr);
    avg_of.assign(regions.size(), {});
    for (int k = K; k >= 1; --k) {
      auto& ids = step_ids[k - 1];
      for (auto it = ids.rbegin(); it != ids.rend(); ++it) assemble_one(*it);
    }
  }

  void assemble_one(int id) {
    Region& r = regions[static_cast<std::size_t>(id)];
    int k = r.meta.step, dim = r.s->dim;
    auto& avg = avg_of[static_cast<std::size_t>(id)];
    avg.assign(static_cast<std::size_t>(K + 1), nullptr);
    NodePtr before = make_leaf(vals_of(r.s.get(), dim));
    for (int j = 0; j < k; ++j) avg[static_cast<std::size_t>(j)] = before;
    if (r.meta.constant) {
      full_of[static_cast<std::size_t>(id)] = r.s;
      for (int j = k; j <= K; ++j) avg[static_cast<std::size_t>(j)] = r.s;
      return;
    }
    int N = r.meta.N, cells = 1 << N;
    NodePtr skeleton = caps.child_step ? e2_avg(r.s) : e4_avg(r.s);
    NodePtr frozen_exc =
        make_leaf(vals_of(r.s.get(), dim), /*frozen=*/true);

    std::vector<NodePtr> grid(static_cast<std::size_t>(cells));
    auto fill_exceptional = [&](std::vector<NodePtr>& g, auto&& content_of) {
      if (r.chaseL >= 0) g.front() = content_of(r.chaseL);
      if (r.chaseR >= 0) g.back() = content_of(r.chaseR);
    };

    // Full tree: regular cells carry the remodeled-through-step-K content,
    // unchased exceptional cells the faithful uncompressed copy.
    for (int m = 1; m < cells - 1; ++m) {
      if (k == K) {
        grid[static_cast<std::size_t>(m)] = r.s;
      } else {
        auto& sub = r.subs[static_cast<std::size_t>(m - 1)];
        grid[static_cast<std::size_t>(m)] =
            caps.child_step
                ? make_branch(full_of[sub[0]], full_of[sub[1]])
                : make_branch(make_branch(full_of[sub[0]], full_of[sub[1]]),
                              make_branch(full_of[sub[2]], full_of[sub[3]]));
      }
    }
    grid.front() = r.s;
    grid.back() = r.s;
    fill_exceptional(grid, [&](int c) { return full_of[c]; });
    full_of[static_cast<std::size_t>(id)] = balanced(grid);

    for (int j = k; j <= K; ++j) {
      std::vector<NodePtr> agrid(static_cast<std::size_t>(cells));
      for (int m = 1; m < cells - 1; ++m) {
        if (j == k || k == K) {
          agrid[static_cast<std::size_t>(m)] = skeleton;
        } else {
          auto& sub = r.subs[static_cast<std::size_t>(m - 1)];
          auto at = [&](int c) {
            return avg_of[static_cast<std::size_t>(c)]
                         [static_cast<std::size_t>(j)];
          };
          agrid[static_cast<std::size_t>(m)] =
              caps.child_step
                  ? make_branch(at(sub[0]), at(sub[1]))
                  : make_branch(make_branch(at(sub[0]), at(sub[1])),
                                make_branch(at(sub[2]), at(sub[3])));
        }
      }
      agrid.front() = frozen_exc;
      agrid.back() = frozen_exc;
      fill_exceptional(agrid, [&](int c) {
        return avg_of[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
      });
      avg[static_cast<std::size_t>(j)] = balanced(agrid);
    }
  }
};

// Evaluates D_J onto the flat cells inside J; the flat partition refines the
// quarter grid, so each cell sits inside one quarter of one grid cell.
void add_d_on_cells(const StartingInterval& s, int comp,
                    const std::vector<FlatCell>& cells,
                    const std::vector<double>& lefts, std::vector<double>& acc) {
  double lo = s.cell.left_endpoint(), hi = s.cell.right_endpoint();
  double grid = std::ldexp(s.cell.measure(), -s.N);
  int n_cells = 1 << s.N;
  std::size_t i = static_cast<std::size_t>(
      std::lower_bound(lefts.begin(), lefts.end(), lo) - lefts.begin());
  for (; i < cells.size() && lefts[i] < hi; ++i) {
    double mid = lefts[i] + 0.5 * cells[i].cell.measure();
    int m = static_cast<int>((mid - lo) / grid);
    if (m <= 0 || m >= n_cells - 1) continue;  // exceptional: D = 0
    double within = (mid - lo) - m * grid;
    int ij = std::min(static_cast<int>(within / (0.25 * grid)), 3);
    acc[i] += s.grand[ij][comp] - s.avg[comp];
  }
}

}  // namespace

StepFunctionR d_contribution(const StartingInterval& s, int comp) {
  StepFunctionR f;
  double lo = s.cell.left_endpoint(), w = s.cell.measure();
  double grid = std::ldexp(w, -s.N);
  int cells = 1 << s.N;
  f.xs.push_back(lo);
  f.vs.push_back(0.0);  // left exceptional cell
  f.xs.push_back(lo + grid);
  for (int m = 1; m < cells - 1; ++m) {
    for (int ij = 0; ij < 4; ++ij) {
      f.vs.push_back(s.grand[ij][comp] - s.avg[comp]);
      f.xs.push_back(lo + m * grid + (ij + 1) * 0.25 * grid);
    }
  }
  f.vs.push_back(0.0);  // right exceptional cell
  f.xs.push_back(lo + w);
  f.validate();
  return f;
}

RemodelState remodel_iterate(const AdaptiveTree& in, const FrequencyPolicy& freq,
                             int K, const RemodelCaps& caps) {
  if (!in.root()) fail("remodel: empty tree");
  if (K < 1 || K > 16) fail("remodel: step count out of range");
  Builder b(freq, K, caps);
  b.run(in.root());
  b.assemble();

  RemodelState st;
  st.k = K;
  st.steps = std::move(b.steps);
  st.tree = AdaptiveTree(b.full_of[0]);
  for (int j = 0; j <= K; ++j)
    st.averaged_by_step.emplace_back(b.avg_of[0][static_cast<std::size_t>(j)]);
  st.averaged = st.averaged_by_step.back();
  st.identity_err = b.identity_err;
  for (const auto& s : st.steps) st.defect += s.defect;

  // Step decomposition: X^j - X^{j-1} = sum of D_J over step-j startings,
  // checked on the flattened averaged trees when they are small enough.
  const NodePtr& fin = st.averaged.root();
  if (!caps.child_step && fin->depth <= DyadicInterval::kMaxGen &&
      expanded_node_count(fin, 4 * static_cast<std::int64_t>(
                                   caps.check_max_cells)) <
          2 * static_cast<std::int64_t>(caps.check_max_cells)) {
    st.decomp_checked = true;
    int dim = in.dim();
    for (int j = 1; j <= K; ++j) {
      auto fine = flatten(st.averaged_by_step[static_cast<std::size_t>(j)].root(),
                          caps.check_max_cells);
      auto coarse = flatten(
          st.averaged_by_step[static_cast<std::size_t>(j - 1)].root(),
          caps.check_max_cells);
      std::vector<double> lefts(fine.size());
      for (std::size_t i = 0; i < fine.size(); ++i)
        lefts[i] = fine[i].cell.left_endpoint();
      for (int c = 0; c < dim; ++c) {
        std::vector<double> acc(fine.size(), 0.0);
        for (const auto& s : st.steps[static_cast<std::size_t>(j - 1)].starting)
          add_d_on_cells(s, c, fine, lefts, acc);
        std::size_t ci = 0;
        for (std::size_t i = 0; i < fine.size(); ++i) {
          while (!coarse[ci].cell.contains(fine[i].cell)) ++ci;
          double diff = fine[i].vals[c] - coarse[ci].vals[c];
          st.decomp_err = std::max(st.decomp_err, std::abs(diff - acc[i]));
        }
      }
    }
  }
  return st;
}

std::vector<std::pair<DyadicInterval, double>> boundary_averages(
    const RemodelState& state, int comp) {
  std::vector<std::pair<DyadicInterval, double>> out;
  for (bool right : {false, true}) {
    NodePtr n = state.averaged.root();
    DyadicInterval I;
    while (n && !n->is_leaf() && I.gen < DyadicInterval::kMaxGen) {
      I = right ? I.right() : I.left();
      n = right ? n->r : n->l;
      out.emplace_back(I, n->v(comp));
    }
  }
  return out;
}

}  // namespace cexlab
