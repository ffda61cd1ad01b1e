#include "cexlab/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "cexlab/numerics.hpp"

namespace cexlab {

void StepFunctionR::validate() const {
  require(xs.size() >= 2, "step function needs at least one cell");
  require(vs.size() + 1 == xs.size(), "step function arity mismatch");
  require(vs.size() <= kMaxPairCells, "step function exceeds cell budget");
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    require(xs[i] < xs[i + 1], "step function breakpoints must increase");
  }
  for (double v : vs) require(std::isfinite(v), "step function value not finite");
}

double StepFunctionR::integral(double a, double b) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    double lo = std::max(a, xs[i]);
    double hi = std::min(b, xs[i + 1]);
    if (hi > lo) acc += vs[i] * (hi - lo);
  }
  return acc;
}

double StepFunctionR::average(double a, double b) const {
  require(b > a, "average over empty interval");
  return integral(a, b) / (b - a);
}

double StepFunctionR::total_integral() const {
  return integral(xs.front(), xs.back());
}

StepFunctionR StepFunctionR::compacted() const {
  StepFunctionR out;
  out.xs.push_back(xs.front());
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (!out.vs.empty() && out.vs.back() == vs[i]) {
      out.xs.back() = xs[i + 1];
    } else {
      out.vs.push_back(vs[i]);
      out.xs.push_back(xs[i + 1]);
    }
  }
  return out;
}

StepFunctionR StepFunctionR::indicator(double a, double b, double value) {
  require(b > a, "indicator of empty interval");
  return {{a, b}, {value}};
}

StepFunctionR StepFunctionR::haar(double a, double b, double scale) {
  require(b > a, "haar of empty interval");
  double mid = 0.5 * (a + b);
  return {{a, mid, b}, {-scale, scale}};
}

StepFunctionR to_step_function(const NodePtr& root, int component,
                               std::size_t max_cells) {
  auto cells = flatten(root, max_cells);
  StepFunctionR out;
  out.xs.reserve(cells.size() + 1);
  out.vs.reserve(cells.size());
  out.xs.push_back(0.0);
  for (const auto& c : cells) {
    out.xs.push_back(c.cell.right_endpoint());
    out.vs.push_back(c.vals[component]);
  }
  return out.compacted();
}

namespace {

// Antiderivative pair for the kernel: d/du [u(ln|u|-1)] = ln|u|.
inline double lam(double u) {
  if (u == 0.0) return 0.0;
  return u * (std::log(std::fabs(u)) - 1.0);
}

// Inner sum for one x-breakpoint pair [x0,x1):
//   sum_j (G_{j-1} - G_j) * [lam(y_j - x0) - lam(y_j - x1)]
// which telescopes the per-cell corner boxes so each y-breakpoint costs two
// antiderivative evaluations.
double inner_sum(const StepFunctionR& G, double x0, double x1) {
  KahanSum acc;
  const std::size_t m = G.vs.size();
  for (std::size_t j = 0; j <= m; ++j) {
    double gprev = (j == 0) ? 0.0 : G.vs[j - 1];
    double gnext = (j == m) ? 0.0 : G.vs[j];
    double jump = gprev - gnext;
    if (jump == 0.0) continue;
    acc.add(jump * (lam(G.xs[j] - x0) - lam(G.xs[j] - x1)));
  }
  return acc.value();
}

}  // namespace

double pair(const StepFunctionR& F, const StepFunctionR& G, int threads) {
  F.validate();
  G.validate();
  const std::size_t n = F.vs.size();
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 0) threads = std::max(1, hw);
  threads = static_cast<int>(std::min<std::size_t>(threads, n));

  // Fixed-size blocks summed in index order keep the result byte-identical
  // for every thread count.
  const std::size_t block = 512;
  const std::size_t nblocks = (n + block - 1) / block;
  std::vector<double> partial(nblocks, 0.0);

  auto run_block = [&](std::size_t bi) {
    std::size_t lo = bi * block, hi = std::min(n, lo + block);
    KahanSum acc;
    for (std::size_t i = lo; i < hi; ++i) {
      if (F.vs[i] == 0.0) continue;
      acc.add(F.vs[i] * inner_sum(G, F.xs[i], F.xs[i + 1]));
    }
    partial[bi] = acc.value();
  };

  if (threads <= 1 || nblocks <= 1) {
    for (std::size_t bi = 0; bi < nblocks; ++bi) run_block(bi);
  } else {
    std::vector<std::thread> pool;
    std::size_t per = (nblocks + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      std::size_t b0 = t * per, b1 = std::min(nblocks, b0 + per);
      if (b0 >= b1) break;
      pool.emplace_back([&, b0, b1] {
        for (std::size_t bi = b0; bi < b1; ++bi) run_block(bi);
      });
    }
    for (auto& th : pool) th.join();
  }
  KahanSum total;
  for (double v : partial) total.add(v);
  return total.value() / std::acos(-1.0);
}

double pair_quadrature(const StepFunctionR& F, const StepFunctionR& G,
                       double tol) {
  F.validate();
  G.validate();
  auto hg = [&](double x) {
    // H(G)(x) without the 1/pi factor
    double acc = 0.0;
    for (std::size_t j = 0; j < G.vs.size(); ++j) {
      if (G.vs[j] == 0.0) continue;
      acc += G.vs[j] * (std::log(std::fabs(G.xs[j + 1] - x)) -
                        std::log(std::fabs(G.xs[j] - x)));
    }
    return acc;
  };
  double acc = 0.0;
  for (std::size_t i = 0; i < F.vs.size(); ++i) {
    if (F.vs[i] == 0.0) continue;
    // split at G breakpoints inside the cell; shave log endpoints
    std::vector<double> pts{F.xs[i], F.xs[i + 1]};
    for (double y : G.xs) {
      if (y > F.xs[i] && y < F.xs[i + 1]) pts.push_back(y);
    }
    std::sort(pts.begin(), pts.end());
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
      double a = pts[k], b = pts[k + 1];
      double eta = 1e-11 * (b - a);
      acc += F.vs[i] * integrate(hg, a + eta, b - eta, tol);
    }
  }
  return acc / std::acos(-1.0);
}

double constant_c() {
  static const double c = [] {
    double v = -pair(StepFunctionR::haar(0.5, 1.0), StepFunctionR::haar(0.0, 1.0), 1);
    require(v > 0.0, "pairing constant must be positive");
    return v;
  }();
  return c;
}

double lemma_b_form(const std::vector<double>& starts, double len) {
  require(!starts.empty() && len > 0.0, "empty interval family");
  auto sorted = starts;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    require(sorted[i] - sorted[i - 1] >= len * (1.0 - 1e-12),
            "interval family must be pairwise disjoint");
  }
  // G = sum of h_J, F = sum of h_{J+} (the Haar functions of right halves);
  // gaps between family members become explicit zero cells.
  auto append = [](StepFunctionR& f, double x0, double x1, double v) {
    if (f.xs.empty()) {
      f.xs.push_back(x0);
    } else if (f.xs.back() < x0) {
      f.vs.push_back(0.0);
      f.xs.push_back(x0);
    }
    f.vs.push_back(v);
    f.xs.push_back(x1);
  };
  StepFunctionR Gf, Ff;
  for (double s : sorted) {
    double m = s + 0.5 * len, e = s + len;
    append(Gf, s, m, -1.0);
    append(Gf, m, e, 1.0);
    double q = m + 0.25 * len;
    append(Ff, m, q, -1.0);
    append(Ff, q, e, 1.0);
  }
  return pair(Ff, Gf, 1);
}

double monotone_profile(double a) {
  require(a >= 1.0, "profile abscissa must be >= 1");
  return pair(StepFunctionR::haar(a, a + 0.5), StepFunctionR::haar(0.0, 1.0), 1);
}

double hilbert_of_haar(double x) {
  double num = 4.0 * std::fabs(x * (x - 1.0));
  double den = (2.0 * x - 1.0) * (2.0 * x - 1.0);
  return std::log(num / den) / std::acos(-1.0);
}

}  // namespace cexlab
