#include "cexlab/verify_appendix.hpp"

#include <algorithm>
#include <cmath>

#include "cexlab/numerics.hpp"

namespace cexlab {

namespace {

// Tridiagonal solve of (-u_{i-1} + 2 u_i - u_{i+1}) = rhs_i on i = 1..m with
// u_0 = lo, u_{m+1} = hi.
std::vector<double> solve_chain(int m, double lo, double hi,
                                const std::vector<double>& rhs) {
  std::vector<double> c(m + 1, 0.0), d(m + 1, 0.0);
  // Thomas forward sweep; diag 2, off-diagonals -1
  c[1] = -0.5;
  d[1] = (rhs[1] + lo) / 2.0;
  for (int i = 2; i <= m; ++i) {
    double denom = 2.0 + c[i - 1];
    c[i] = -1.0 / denom;
    d[i] = (rhs[i] + d[i - 1]) / denom;
  }
  std::vector<double> u(m + 2, 0.0);
  u[0] = lo;
  u[m + 1] = hi;
  for (int i = m; i >= 1; --i) u[i] = d[i] - c[i] * u[i + 1];
  return u;
}

}  // namespace

WalkLaw walk_laws(int a, int b) {
  require(a >= 1 && b >= 1, "walk barriers must be positive");
  int m = a + b - 1;  // interior states
  std::vector<double> zero(m + 1, 0.0), two(m + 1, 2.0);
  auto hit = solve_chain(m, 0.0, 1.0, zero);   // P(hit +b) per state
  auto time = solve_chain(m, 0.0, 0.0, two);   // E[steps] per state
  return {hit[a], time[a]};
}

double walk_hit_probability(int a, int b) { return walk_laws(a, b).hit_upper; }

double walk_hit_mc(int a, int b, int n, std::uint64_t seed) {
  require(a >= 1 && b >= 1 && n >= 1, "walk parameters out of range");
  Rng rng(seed);
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    int s = 0;
    while (s > -a && s < b) s += (rng() & 1) ? 1 : -1;
    if (s == b) ++hits;
  }
  return static_cast<double>(hits) / n;
}

HyperbolaPoints lower_hyperbola_solve(double x, double y, double p) {
  require(p > 1.0, "exponent must exceed 1");
  require(x > 0.0 && y > 0.0, "hyperbola point must be positive");
  double prod = x * std::pow(y, p - 1.0);
  require(prod >= 1.0 - 1e-12, "point lies below the hyperbola");
  if (prod <= 1.0 + 1e-12) return {x, y, x, y};

  auto f = [&](double b) {
    return std::pow(b, 1.0 - p) + std::pow(2.0 * y - b, 1.0 - p);
  };
  // f decreases on (0, y]; sample to confirm before trusting the root
  {
    double prev = f(y / 256.0);
    for (double b = y / 128.0; b <= y * 1.0000001; b *= 2.0) {
      double cur = f(b);
      require(cur <= prev + 1e-12, "hyperbola profile not decreasing");
      prev = cur;
    }
  }
  double lo = 0.5 * y;
  while (f(lo) < 2.0 * x) lo *= 0.5;
  double b1 = bisect([&](double b) { return f(b) - 2.0 * x; }, lo, y, 0.0, 200);
  for (int i = 0; i < 4; ++i) {  // Newton polish
    double fb = f(b1) - 2.0 * x;
    double df = (1.0 - p) * (std::pow(b1, -p) - std::pow(2.0 * y - b1, -p));
    if (df == 0.0) break;
    double next = b1 - fb / df;
    if (next > 0.0 && next <= y) b1 = next;
  }
  double b2 = 2.0 * y - b1;
  return {std::pow(b1, 1.0 - p), b1, std::pow(b2, 1.0 - p), b2};
}

UpperHyperbolaBound upper_hyperbola_bound(double x1, double y1, double x2,
                                          double y2, double p, double A) {
  require(p > 1.0, "exponent must exceed 1");
  require(x1 > 0 && y1 > 0 && x2 > 0 && y2 > 0 && A > 0,
          "segment endpoints must be positive");
  auto prod = [&](double u, double v) { return u * std::pow(v, p - 1.0); };
  double slack = A * (1.0 + 1e-9);
  require(prod(x1, y1) <= slack, "left endpoint violates the hypothesis");
  require(prod(x2, y2) <= slack, "right endpoint violates the hypothesis");
  require(prod(0.5 * (x1 + x2), 0.5 * (y1 + y2)) <= slack,
          "midpoint violates the hypothesis");

  auto g = [&](double t) {
    return prod(x1 + t * (x2 - x1), y1 + t * (y2 - y1));
  };
  double best = std::max(g(0.0), g(1.0));
  double targ = 0.0;
  const int grid = 256;
  for (int i = 0; i <= grid; ++i) {
    double t = static_cast<double>(i) / grid;
    double v = g(t);
    if (v > best) {
      best = v;
      targ = t;
    }
  }
  double lo = std::max(0.0, targ - 1.0 / grid);
  double hi = std::min(1.0, targ + 1.0 / grid);
  best = std::max(best, golden_max(g, lo, hi, 1e-14));
  return {best, best <= std::pow(2.0, p) * A * (1.0 + 1e-12)};
}

double power_weight_average(double a, double b, double p) {
  require(b > a, "average over empty interval");
  auto anti = [&](double t) {
    return std::copysign(std::pow(std::fabs(t), p) / p, t);
  };
  return (anti(b) - anti(a)) / (b - a);
}

double power_sigma_average(double a, double b, double p) {
  require(b > a, "average over empty interval");
  auto anti = [&](double t) {
    double u = std::fabs(t);
    double v = (u <= 1.0) ? u : 1.0 + (p - 1.0) * (1.0 - std::pow(u, -1.0 / (p - 1.0)));
    return std::copysign(v, t);
  };
  return (anti(b) - anti(a)) / (b - a);
}

TwoWeightReport two_weight_counterexample(double p, const std::vector<double>& t_list,
                                          std::uint64_t seed) {
  require(p > 1.0, "exponent must exceed 1");
  for (double t : t_list) require(t >= 10.0, "horizon values must be >= 10");

  TwoWeightReport rep;
  rep.p = p;
  rep.seed = seed;
  rep.t_values = t_list;
  std::sort(rep.t_values.begin(), rep.t_values.end());

  Rng rng(seed);
  std::uniform_real_distribution<double> ucenter(-500.0, 500.0);
  std::uniform_real_distribution<double> ulen(std::log(1e-3), std::log(1e3));
  rep.samples = 10000;
  for (int i = 0; i < rep.samples; ++i) {
    double len = std::exp(ulen(rng));
    double c = ucenter(rng);
    double a = c - 0.5 * len, b = c + 0.5 * len;
    double prod = power_weight_average(a, b, p) *
                  std::pow(power_sigma_average(a, b, p), p - 1.0);
    rep.ap_sampled_sup = std::max(rep.ap_sampled_sup, prod);
  }

  // |pi H(f sigma)|^p w = |ln(t/(t-1))|^p t^{p-1} =: g(t); g(t) * t -> 1, so
  // int_2^T g has unit slope against ln T. Integrate in u = ln t.
  auto g = [&](double t) {
    return std::pow(std::log(t / (t - 1.0)), p) * std::pow(t, p - 1.0);
  };
  auto gu = [&](double u) {
    double t = std::exp(u);
    return g(t) * t;
  };
  rep.quadrature_ok = true;
  std::vector<double> logs;
  for (double T : rep.t_values) {
    double v = integrate(gu, std::log(2.0), std::log(T), 1e-9);
    if (!std::isfinite(v)) rep.quadrature_ok = false;
    rep.norm_integrals.push_back(v);
    logs.push_back(std::log(T));
  }
  if (rep.t_values.size() >= 2) {
    rep.slope_vs_logT = ls_slope(logs, rep.norm_integrals);
  }

  rep.tail_ratio_lo = 1e300;
  rep.tail_ratio_hi = 0.0;
  for (int i = 0; i <= 200; ++i) {
    double t = 10.0 * std::pow(1e5, i / 200.0);
    double r = g(t) * t;
    rep.tail_ratio_lo = std::min(rep.tail_ratio_lo, r);
    rep.tail_ratio_hi = std::max(rep.tail_ratio_hi, r);
  }
  return rep;
}

double delta_for_epsilon(double eps) {
  require(eps > 0.0, "epsilon must be positive");
  auto ok = [&](double d) {
    double sq = std::sqrt(d);
    double g1 = (1.0 - 2.0 * sq) * std::pow(1.0 + d, -2.0 / sq) -
                std::pow(1.0 + eps, -0.5);
    double g2 = std::pow(1.0 + eps, 0.5) -
                (1.0 + 2.0 * sq) * std::pow(1.0 + d, 2.0 + 2.0 / sq);
    return std::min(g1, g2);
  };
  double hi = 0.25 - 1e-9;
  if (ok(hi) > 0.0) return hi;
  double lo = 1e-12;
  require(ok(lo) > 0.0, "no admissible delta at this epsilon");
  double root = bisect(ok, lo, hi, 0.0, 200);
  return root * (1.0 - 1e-9);
}

namespace {

struct GridView {
  int L = 0;                 // window is [0, 2^L)
  int m = 0;                 // finest cell width 2^-m
  std::size_t ncells = 0;    // 2^{L+m}
  std::vector<double> prefix;  // integrals at grid points, size ncells+1

  double cell_width() const { return std::ldexp(1.0, -m); }
  double avg(std::size_t i, std::size_t j) const {  // over cells [i, j)
    return (prefix[j] - prefix[i]) / (static_cast<double>(j - i) * cell_width());
  }
};

int window_exponent(const StepFunctionR& f) {
  require(f.xs.front() == 0.0, "window must start at 0");
  double X = f.xs.back();
  int L = static_cast<int>(std::lround(std::log2(X)));
  require(L >= 0 && L <= 30 && std::ldexp(1.0, L) == X,
          "window length must be a power of two");
  return L;
}

int grid_resolution(const StepFunctionR& f) {
  for (int m = 0; m <= 40; ++m) {
    bool ok = true;
    for (double x : f.xs) {
      double v = std::ldexp(x, m);
      if (v != std::floor(v)) {
        ok = false;
        break;
      }
    }
    if (ok) return m;
  }
  fail("step function breakpoints not dyadic-aligned");
}

GridView make_grid(const StepFunctionR& f, int L, int m) {
  GridView g;
  g.L = L;
  g.m = m;
  require(L + m <= 22, "window resolution too fine");
  g.ncells = std::size_t{1} << (L + m);
  g.prefix.assign(g.ncells + 1, 0.0);
  double w = g.cell_width();
  std::size_t bp = 0;
  for (std::size_t k = 0; k < g.ncells; ++k) {
    double x = static_cast<double>(k) * w;
    while (bp + 1 < f.vs.size() && f.xs[bp + 1] <= x) ++bp;
    g.prefix[k + 1] = g.prefix[k] + f.vs[bp] * w;
  }
  return g;
}

}  // namespace

double step_strong_dyadic_smoothness(const StepFunctionR& f) {
  f.validate();
  int L = window_exponent(f);
  GridView g = make_grid(f, L, grid_resolution(f));
  double worst = 1.0;
  for (std::size_t span = 1; span <= g.ncells / 2; span *= 2) {
    for (std::size_t i = 0; i + 2 * span <= g.ncells; i += span) {
      double a = g.avg(i, i + span);
      double b = g.avg(i + span, i + 2 * span);
      require(a > 0.0 && b > 0.0, "smoothness needs a positive weight");
      worst = std::max(worst, std::max(a / b, b / a));
    }
  }
  return worst;
}

double step_dyadic_char(const StepFunctionR& w, const StepFunctionR& sigma,
                        double p) {
  w.validate();
  sigma.validate();
  int L = window_exponent(w);
  require(L == window_exponent(sigma), "weights live on different windows");
  int m = std::max(grid_resolution(w), grid_resolution(sigma));
  GridView gw = make_grid(w, L, m);
  GridView gs = make_grid(sigma, L, m);
  double sup = 0.0;
  for (std::size_t span = 1; span <= gw.ncells; span *= 2) {
    for (std::size_t i = 0; i + span <= gw.ncells; i += span) {
      double prod = gw.avg(i, i + span) * std::pow(gs.avg(i, i + span), p - 1.0);
      sup = std::max(sup, prod);
    }
  }
  return sup;
}

NazarovReport nazarov_transfer_check(const StepFunctionR& w,
                                     const StepFunctionR& sigma, double p,
                                     double delta, double eps,
                                     std::uint64_t seed) {
  require(p > 1.0, "exponent must exceed 1");
  require(delta > 0.0 && delta < 0.25, "delta must lie in (0, 1/4)");
  require(eps > 0.0, "epsilon must be positive");
  NazarovReport rep;
  rep.ssd_w = step_strong_dyadic_smoothness(w);
  rep.ssd_sigma = step_strong_dyadic_smoothness(sigma);
  rep.smoothness_ok =
      rep.ssd_w <= 1.0 + delta + 1e-12 && rep.ssd_sigma <= 1.0 + delta + 1e-12;

  int L = window_exponent(w);
  double X = std::ldexp(1.0, L);
  Rng rng(seed);
  std::uniform_real_distribution<double> upos(0.0, 1.0);

  double bound_half = std::sqrt(1.0 + eps);
  rep.worst_endpoint_ratio = 1.0;
  rep.worst_halves_ratio = 1.0;
  rep.samples = 1000;
  double sqd = std::sqrt(delta);
  for (int s = 0; s < rep.samples; ++s) {
    double len = std::exp(std::log(1e-4 * X) +
                          upos(rng) * std::log(0.4 / 1e-4));
    double a = upos(rng) * (X - len);
    double b = a + len;
    // dyadic J at each endpoint with |J| <= sqrt(delta)|I| <= 2|J|
    int j = static_cast<int>(std::ceil(-std::log2(sqd * len)));
    double jw = std::ldexp(1.0, -j);
    for (double e : {a, b}) {
      double j0 = std::floor(e / jw) * jw;
      if (j0 < 0.0 || j0 + jw > X) continue;
      for (const StepFunctionR* f : {&w, &sigma}) {
        double aj = f->average(j0, j0 + jw);
        double ai = f->average(a, b);
        rep.worst_endpoint_ratio =
            std::max({rep.worst_endpoint_ratio, aj / ai, ai / aj});
      }
    }
    double mid = 0.5 * (a + b);
    for (const StepFunctionR* f : {&w, &sigma}) {
      double lo = f->average(a, mid), hi = f->average(mid, b);
      rep.worst_halves_ratio = std::max({rep.worst_halves_ratio, lo / hi, hi / lo});
    }
  }
  rep.claim_ok = rep.worst_endpoint_ratio <= bound_half * (1.0 + 1e-9);
  rep.halves_ok = rep.worst_halves_ratio <= (1.0 + eps) * (1.0 + 1e-9);

  rep.dyadic_char = step_dyadic_char(w, sigma, p);
  for (int s = 0; s < 10000; ++s) {
    double len = std::exp(std::log(1e-4 * X) + upos(rng) * std::log(1e4));
    len = std::min(len, X);
    double a = upos(rng) * (X - len);
    double prod = w.average(a, a + len) *
                  std::pow(sigma.average(a, a + len), p - 1.0);
    rep.sampled_char = std::max(rep.sampled_char, prod);
  }
  rep.lemma2_ok = rep.sampled_char <= 1.25 * rep.dyadic_char + 1e-6;
  return rep;
}

}  // namespace cexlab
