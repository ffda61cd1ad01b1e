// Command-line surface: builds the dyadic weight constructions, runs the
// rearrangement transforms and the end-to-end pipelines, and checks the
// standalone lemmas. Every subcommand emits one deterministic JSON report
// (stdout or --json PATH); exit 0 when all checks in the report pass, 1 when
// any fails, 2 on bad usage.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cexlab/characteristics.hpp"
#include "cexlab/error.hpp"
#include "cexlab/hilbert.hpp"
#include "cexlab/large_step.hpp"
#include "cexlab/numerics.hpp"
#include "cexlab/pipelines.hpp"
#include "cexlab/remodel.hpp"
#include "cexlab/report.hpp"
#include "cexlab/small_step.hpp"
#include "cexlab/verify_appendix.hpp"

namespace {

using namespace cexlab;

void usage_check(bool cond, const std::string& what) {
  if (!cond) throw UsageError(what);
}

// Common output plumbing: every handler fills a JsonWriter and a list of
// named checks; the checks decide the exit code and are echoed in the
// report under "checks".
struct Checks {
  std::vector<std::pair<std::string, bool>> items;

  void add(const std::string& name, bool ok) { items.emplace_back(name, ok); }
  bool all_ok() const {
    return std::all_of(items.begin(), items.end(),
                       [](const auto& it) { return it.second; });
  }
  void write(JsonWriter& w) const {
    w.key("checks");
    w.begin_object();
    for (const auto& [name, ok] : items) w.field(name, ok);
    w.end_object();
  }
};

void emit(const std::string& text, const std::string& json_path) {
  if (json_path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw Error("cannot open " + json_path + " for writing");
  out << text << "\n";
}

void emit_csv(const std::vector<std::vector<std::string>>& rows,
              const std::string& csv_path) {
  if (csv_path.empty()) return;
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw Error("cannot open " + csv_path + " for writing");
  for (const auto& row : rows) out << csv_row(row);
}

void write_weights_report(JsonWriter& w, const WeightsReport& wr) {
  w.key("weights");
  w.begin_object();
  w.field("p", wr.p);
  w.field("ap", wr.ap.sup);
  w.field("ap_argmax", std::string_view(wr.ap.argmax.key()));
  w.field("s_dyadic_w", wr.s_dyadic_w);
  w.field("s_strong_w", wr.s_strong_w);
  w.field("s_dyadic_sigma", wr.s_dyadic_sigma);
  w.field("s_strong_sigma", wr.s_strong_sigma);
  w.field("doubling_w", wr.doubling_w);
  w.field("doubling_sigma", wr.doubling_sigma);
  w.field("mass_w", wr.mass_w);
  w.field("mass_sigma", wr.mass_sigma);
  w.field("leftover", wr.leftover);
  w.end_object();
}

AdaptiveTree build_quad(double p, double M, const std::string& variant) {
  usage_check(p > 1.0, "--p must be > 1");
  usage_check(M > 2.0, "--M must be > 2");
  usage_check(variant == "mult" || variant == "shift",
              "--variant must be mult or shift");
  LargeStepParams params = make_large_step_params(p, M);
  AdaptiveTree weights = build_weights(params);
  return variant == "mult" ? build_mult_pair(params, weights)
                           : build_shift_pair(params, weights);
}

// ---------------------------------------------------------------------------
// build: power-scale weight pair plus test functions, report + tree JSON.

int run_build(double p, double M, const std::string& variant,
              const std::string& json_path) {
  AdaptiveTree quad = build_quad(p, M, variant);
  LargeStepParams params = make_large_step_params(p, M);
  WeightsReport wr = measure_weights(quad, p);
  double damage =
      variant == "mult" ? damage_mult(quad) : damage_shift(quad);

  Checks checks;
  double window_lo = M * (1.0 - 1e-12);
  double window_hi = 4.0 * M * std::exp(1.0) * (1.0 + 1e-12);
  checks.add("char_window", wr.ap.sup >= window_lo && wr.ap.sup <= window_hi);
  checks.add("masses_finite",
             std::isfinite(wr.mass_w) && std::isfinite(wr.mass_sigma));

  JsonWriter w;
  w.begin_object();
  w.field("schema_version", kSchemaVersion);
  w.field("command", std::string_view("build"));
  w.field("p", p);
  w.field("M", M);
  w.field("variant", std::string_view(variant));
  w.field("beta", params.beta);
  w.field("N", params.N);
  w.field("damage", damage);
  w.field("damage_per_M2", damage / (M * M));
  write_weights_report(w, wr);
  checks.write(w);
  w.key("quad");
  w.raw(quad.to_json());
  w.end_object();
  emit(w.str(), json_path);
  return checks.all_ok() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// transform small-step: d-th order walk rearrangement of the built pair.

int run_small_step(double p, double M, int d, const std::string& variant,
                   double cap_mult, int threads, const std::string& json_path) {
  usage_check(d >= 1 && d <= 64, "--d must be in [1, 64]");
  usage_check(cap_mult > 0, "--cap-mult must be positive");
  usage_check(variant == "generic" || variant == "triangle",
              "--variant must be generic or triangle");
  (void)threads;
  // the generic lemma preserves the multiplier form, the triangle lemma keeps
  // a fixed fraction of the shift form; each gets its natural test pair
  AdaptiveTree quad =
      build_quad(p, M, variant == "generic" ? "mult" : "shift");

  double damage_in =
      variant == "generic" ? damage_mult(quad) : damage_shift(quad);
  double ap_in = ap_dyadic_components(quad.root(), kCompW, kCompSigma, p).sup;
  double sd_in =
      std::max(smoothness_component(quad.root(), kCompW, SmoothnessKind::kDyadic),
               smoothness_component(quad.root(), kCompSigma,
                                    SmoothnessKind::kDyadic));

  Checks checks;
  JsonWriter w;
  w.begin_object();
  w.field("schema_version", kSchemaVersion);
  w.field("command", std::string_view("transform-small-step"));
  w.field("p", p);
  w.field("M", M);
  w.field("d", d);
  w.field("variant", std::string_view(variant));
  w.field("damage_in", damage_in);
  w.field("ap_in", ap_in);
  w.field("s_dyadic_in", sd_in);

  if (variant == "generic") {
    int cap = static_cast<int>(std::lround(cap_mult * default_generic_cap(d)));
    SmallStepResult res = small_step_transform(quad, d, cap);
    double damage_out = damage_mult(res.tree);
    double ap_out =
        ap_dyadic_components(res.tree.root(), kCompW, kCompSigma, p).sup;
    double sd_out = std::max(
        smoothness_component(res.tree.root(), kCompW, SmoothnessKind::kDyadic),
        smoothness_component(res.tree.root(), kCompSigma,
                             SmoothnessKind::kDyadic));
    w.field("cap", cap);
    w.field("leftover", res.leftover);
    w.field("damage_out", damage_out);
    w.field("ap_out", ap_out);
    w.field("s_dyadic_out", sd_out);
    w.field("nodes",
            static_cast<std::int64_t>(shared_node_count(res.tree.root())));
    write_weights_report(w, measure_weights(res.tree, p));
    checks.add("smoothness_contracted",
               sd_out <= 1.0 + (sd_in - 1.0) / d + 1e-12);
    checks.add("char_bounded",
               ap_out <= std::pow(2.0, p) * ap_in * (1.0 + 1e-12));
    checks.add("damage_preserved",
               std::abs(damage_out - damage_in) <= 2e-3 * damage_in);
  } else {
    int cap = static_cast<int>(std::lround(cap_mult * default_triangle_cap(d)));
    TriangleResult res = small_step_triangle_transform(quad, d, cap);
    double damage_out = damage_shift(res.tree);
    double odd_sup = std::max(
        {max_abs_haar_odd_generation(res.tree.root(), kCompW),
         max_abs_haar_odd_generation(res.tree.root(), kCompSigma),
         max_abs_haar_odd_generation(res.tree.root(), kCompG)});
    w.field("cap", cap);
    w.field("leftover", res.leftover);
    w.field("damage_out", damage_out);
    w.field("damage_ratio", damage_out / damage_in);
    w.field("odd_haar_sup", odd_sup);
    w.field("nodes",
            static_cast<std::int64_t>(shared_node_count(res.tree.root())));
    write_weights_report(w, measure_weights(res.tree, p));
    checks.add("odd_generations_flat", odd_sup == 0.0);
    checks.add("damage_ratio_floor", damage_out / damage_in >= 0.2 - 1e-6);
  }

  checks.write(w);
  w.end_object();
  emit(w.str(), json_path);
  return checks.all_ok() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// transform remodel: iterated remodeling of the built pair.

int run_remodel(double p, double M, int steps, int default_N,
                const std::string& schedule_path, double chase_mass,
                const std::string& json_path) {
  usage_check(steps >= 1 && steps <= 8, "--steps must be in [1, 8]");
  usage_check(default_N >= 3 && default_N <= 20,
              "--default-N must be in [3, 20]");
  usage_check(chase_mass > 0 && chase_mass <= 0.125,
              "--chase-mass must be in (0, 1/8]");
  // the mult pair: its damage form is a rearrangement invariant worth echoing
  AdaptiveTree quad = build_quad(p, M, "mult");

  FrequencyPolicy policy;
  if (schedule_path.empty()) {
    policy = uniform_frequency(default_N);
  } else {
    std::ifstream in(schedule_path);
    usage_check(static_cast<bool>(in), "cannot open schedule " + schedule_path);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("schedule parse: " + std::string(e.what()));
    }
    usage_check(doc.is_object(), "schedule must be a JSON object of key -> N");
    std::unordered_map<std::string, int> by_key;
    for (const auto& [key, val] : doc.items()) {
      usage_check(val.is_number_integer(), "schedule value for " + key +
                                               " must be an integer");
      by_key[key] = val.get<int>();
    }
    policy = scheduled_frequency(std::move(by_key), default_N);
  }

  double ap_in = ap_dyadic_components(quad.root(), kCompW, kCompSigma, p).sup;
  double damage_in = damage_mult_components(quad.root(), kCompF, kCompG);

  RemodelCaps caps;
  caps.chase_mass = chase_mass;
  RemodelState rs = remodel_iterate(quad, policy, steps, caps);

  double ap_out = ap_dyadic_components(rs.tree.root(), kCompW, kCompSigma, p).sup;
  double damage_out = damage_mult_components(rs.tree.root(), kCompF, kCompG);
  double boundary_err = 0;
  for (int comp = 0; comp < 4; ++comp) {
    double global = rs.tree.root()->v(comp);
    for (const auto& [cell, avg] : boundary_averages(rs, comp))
      boundary_err = std::max(boundary_err, std::abs(avg - global));
  }

  Checks checks;
  checks.add("identity", rs.identity_err <= 1e-9);
  checks.add("boundary_averages", boundary_err <= 1e-12);
  checks.add("char_preserved",
             std::abs(ap_out - ap_in) <= 1e-12 * std::abs(ap_in));
  checks.add("damage_preserved",
             std::abs(damage_out - damage_in) <= 1e-12 * std::abs(damage_in));
  if (rs.decomp_checked) checks.add("decomposition", rs.decomp_err <= 1e-9);

  JsonWriter w;
  w.begin_object();
  w.field("schema_version", kSchemaVersion);
  w.field("command", std::string_view("transform-remodel"));
  w.field("p", p);
  w.field("M", M);
  w.field("steps", steps);
  w.field("default_N", default_N);
  w.field("schedule", std::string_view(schedule_path));
  w.field("chase_mass", chase_mass);
  w.key("startings");
  w.begin_array();
  for (const auto& st : rs.steps)
    w.value(static_cast<std::int64_t>(st.starting.size()));
  w.end_array();
  w.field("defect", rs.defect);
  w.field("identity_err", rs.identity_err);
  w.field("decomp_err", rs.decomp_err);
  w.field("decomp_checked", rs.decomp_checked);
  w.field("boundary_err", boundary_err);
  w.field("ap_in", ap_in);
  w.field("ap_out", ap_out);
  w.field("damage_in", damage_in);
  w.field("damage_out", damage_out);
  write_weights_report(w, measure_weights(rs.tree, p));
  checks.write(w);
  w.end_object();
  emit(w.str(), json_path);
  return checks.all_ok() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// measure: characteristics of the built pair, JSON + CSV flattening.

int run_measure(double p, double M, const std::string& variant,
                const std::string& json_path, const std::string& csv_path) {
  AdaptiveTree quad = build_quad(p, M, variant);
  WeightsReport wr = measure_weights(quad, p);

  JsonWriter w;
  w.begin_object();
  w.field("schema_version", kSchemaVersion);
  w.field("command", std::string_view("measure"));
  w.field("p", p);
  w.field("M", M);
  w.field("variant", std::string_view(variant));
  write_weights_report(w, wr);
  Checks checks;
  checks.add("finite", std::isfinite(wr.ap.sup));
  checks.write(w);
  w.end_object();
  emit(w.str(), json_path);

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"quantity", "value", "argmax"});
  auto row = [&rows](const std::string& q, double v, const std::string& arg) {
    rows.push_back({q, fmt_double(v), arg});
  };
  row("ap", wr.ap.sup, wr.ap.argmax.key());
  row("s_dyadic_w", wr.s_dyadic_w, "");
  row("s_strong_w", wr.s_strong_w, "");
  row("s_dyadic_sigma", wr.s_dyadic_sigma, "");
  row("s_strong_sigma", wr.s_strong_sigma, "");
  row("doubling_w", wr.doubling_w, "");
  row("doubling_sigma", wr.doubling_sigma, "");
  row("mass_w", wr.mass_w, "");
  row("mass_sigma", wr.mass_sigma, "");
  row("leftover", wr.leftover, "");
  emit_csv(rows, csv_path);
  return 0;
}

// ---------------------------------------------------------------------------
// pipelines

int run_pipeline_hilbert(const HilbertParams& params,
                         const std::string& json_path) {
  HilbertReport rep = hilbert_example(params);
  emit(to_json(rep), json_path);
  bool ok = rep.cross_ok && rep.main_ok && rep.step1_ok && rep.identity_ok;
  return ok ? 0 : 1;
}

int run_pipeline_sarason(const SarasonParams& params,
                         const std::string& json_path) {
  SarasonReport rep = sarason_direct_sum(params);
  emit(to_json(rep), json_path);
  bool ratios_ok = !rep.copies.empty();
  for (const auto& c : rep.copies)
    ratios_ok = ratios_ok && c.ratio_over_growth > 0;
  bool ok = rep.wavg_exact && ratios_ok && rep.spearman_growth >= 0;
  return ok ? 0 : 1;
}

// Smallest walk order making the cubed one-step contraction of the seed's
// sibling ratio land under 1 + eps.
int derive_two_valued_d(double p, double Q, double eps) {
  usage_check(eps > 0, "--eps must be positive");
  HyperbolaPoints hp = lower_hyperbola_solve(Q, 1.0, p);
  double s0 = std::max(hp.a1 / hp.a2, hp.b2 / hp.b1);
  double target = std::cbrt(1.0 + eps) - 1.0;
  for (int d = 1; d <= 64; ++d)
    if ((s0 - 1.0) / d <= target) return d;
  throw UsageError("--eps needs a walk order beyond 64; loosen eps or Q");
}

int run_pipeline_two_valued(TwoValuedParams params, double eps, bool has_eps,
                            const std::string& json_path) {
  if (has_eps) params.d = derive_two_valued_d(params.p, params.Q, eps);
  TwoValuedReport rep = two_valued_weight(params);
  emit(to_json(rep), json_path);
  bool ok = rep.cardinality_ok && rep.window_ok && rep.smooth_ok;
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify hilbert-lemma: engine cross-checks, one-sided sign lemma, grid form
// bound, monotone profile.

int run_verify_hilbert(std::uint64_t seed, int threads,
                       const std::string& json_path) {
  double c = constant_c();

  // engine: antisymmetry, closed form vs quadrature, rescaling identity
  StepFunctionR F = StepFunctionR::haar(0.0, 1.0);
  StepFunctionR G = StepFunctionR::indicator(0.25, 0.625);
  double closed = pair(F, G, threads);
  double quad = pair_quadrature(F, G);
  double self = pair(G, G, threads);
  double rescale = // <H(h_I), h_{I+}> = -c|I| at I = [2, 2.125)
      pair(StepFunctionR::haar(2.0625, 2.125),
           StepFunctionR::haar(2.0, 2.125), threads);
  bool engine_ok = std::abs(closed - quad) <= 1e-8 && std::abs(self) <= 1e-10 &&
                   std::abs(rescale - (-c * 0.125)) <= 1e-10 && c > 0;

  // (a): <H(h_I), h_{J+}> + <H(h_J), h_{I+}> < 0 on seeded disjoint pairs
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int sign_bad = 0;
  double sign_worst = -1e300;
  for (int trial = 0; trial < 50; ++trial) {
    double len = std::ldexp(1.0, -(1 + static_cast<int>(trial % 5)));
    double x = unif(rng) * 4.0;
    double gap = len * (1e-3 + 4.0 * unif(rng));
    double y = x + len + gap;
    StepFunctionR hI = StepFunctionR::haar(x, x + len);
    StepFunctionR hJ = StepFunctionR::haar(y, y + len);
    StepFunctionR hIp = StepFunctionR::haar(x + len / 2, x + len);
    StepFunctionR hJp = StepFunctionR::haar(y + len / 2, y + len);
    double form = pair(hJp, hI, threads) + pair(hIp, hJ, threads);
    sign_worst = std::max(sign_worst, form);
    if (!(form < 0)) ++sign_bad;
  }

  // (b): grid form <= -c |union| for the interior cells of the 2^N grids
  bool form_ok = true;
  std::vector<double> form_values;
  for (int N = 3; N <= 5; ++N) {
    double len = std::ldexp(1.0, -N);
    std::vector<double> starts;
    for (int k = 1; k + 1 < (1 << N); ++k) starts.push_back(k * len);
    double value = lemma_b_form(starts, len);
    double covered = static_cast<double>(starts.size()) * len;
    form_values.push_back(value);
    form_ok = form_ok && value <= -c * covered + 1e-8;
  }

  // monotone profile on a in {1, 1.25, ..., 5}
  bool monotone_ok = true;
  double prev = monotone_profile(1.0);
  for (double a = 1.25; a <= 5.0 + 1e-9; a += 0.25) {
    double cur = monotone_profile(a);
    monotone_ok = monotone_ok && cur < prev;
    prev = cur;
  }

  Checks checks;
  checks.add("engine", engine_ok);
  checks.add("sign_lemma", sign_bad == 0);
  checks.add("form_bound", form_ok);
  checks.add("monotone_profile", monotone_ok);

  JsonWriter w;
  w.begin_object();
  w.field("schema_version", kSchemaVersion);
  w.field("command", std::string_view("verify-hilbert-lemma"));
  w.field("seed", static_cast<std::int64_t>(seed));
  w.field("c", c);
  w.field("pair_closed", closed);
  w.field("pair_quadrature", quad);
  w.field("sign_trials", 50);
  w.field("sign_violations", sign_bad);
  w.field("sign_worst", sign_worst);
  w.key("grid_forms");
  w.begin_array();
  for (double v : form_values) w.value(v);
  w.end_array();
  checks.write(w);
  w.end_object();
  emit(w.str(), json_path);
  return checks.all_ok() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// verify appendix sections

void write_section_walks(JsonWriter& w, Checks& checks, std::uint64_t seed) {
  bool closed_ok = true;
  double worst = 0;
  for (int a = 1; a <= 12; ++a) {
    for (int b = 1; b <= 12; ++b) {
      WalkLaw law = walk_laws(a, b);
      double err = std::abs(law.hit_upper -
                            static_cast<double>(a) / static_cast<double>(a + b));
      double err_steps =
          std::abs(law.expected_steps - static_cast<double>(a) * b);
      worst = std::max({worst, err, err_steps});
      closed_ok = closed_ok && err <= 1e-12 && err_steps <= 1e-10;
    }
  }
  const int n = 100000;
  double mc = walk_hit_mc(3, 5, n, seed);
  double exact = 3.0 / 8.0;
  double se = std::sqrt(exact * (1.0 - exact) / n);
  bool mc_ok = std::abs(mc - exact) <= 3.0 * se;

  w.key("walks");
  w.begin_object();
  w.field("worst_error", worst);
  w.field("mc_hit", mc);
  w.field("mc_exact", exact);
  w.field("mc_se", se);
  w.end_object();
  checks.add("walks_closed_form", closed_ok);
  checks.add("walks_monte_carlo", mc_ok);
}

void write_section_hyperbola(JsonWriter& w, Checks& checks,
                             std::uint64_t seed) {
  // quadratic oracle at p = 2, (x, y) = (5/4, 1): b^2 - 2b + 4/5 = 0
  HyperbolaPoints hp = lower_hyperbola_solve(1.25, 1.0, 2.0);
  double b1 = 1.0 - std::sqrt(0.2);
  bool oracle_ok = std::abs(hp.b1 - b1) <= 1e-10 &&
                   std::abs(hp.b2 - (2.0 - b1)) <= 1e-10 &&
                   std::abs(hp.a1 - 1.0 / b1) <= 1e-10;
  bool identity_ok = true;
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    double p = 1.2 + 2.4 * unif(rng);
    double y = 0.25 + 2.0 * unif(rng);
    double x = (1.0 + 3.0 * unif(rng)) / std::pow(y, p - 1.0);
    HyperbolaPoints q = lower_hyperbola_solve(x, y, p);
    identity_ok = identity_ok &&
                  std::abs((q.a1 + q.a2) / 2 - x) <= 1e-10 * std::max(1.0, x) &&
                  std::abs((q.b1 + q.b2) / 2 - y) <= 1e-10 * std::max(1.0, y) &&
                  std::abs(q.a1 * std::pow(q.b1, p - 1.0) - 1.0) <= 1e-10 &&
                  std::abs(q.a2 * std::pow(q.b2, p - 1.0) - 1.0) <= 1e-10;
  }
  // adversarial chords never beat 2^p A
  bool chord_ok = true;
  double worst_margin = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    double p = 1.2 + 2.4 * unif(rng);
    double y1 = 0.25 + 2.0 * unif(rng);
    double y2 = 0.25 + 2.0 * unif(rng);
    double x1 = (0.2 + unif(rng)) / std::pow(y1, p - 1.0);
    double x2 = (0.2 + unif(rng)) / std::pow(y2, p - 1.0);
    double A = std::max({x1 * std::pow(y1, p - 1.0), x2 * std::pow(y2, p - 1.0),
                         (x1 + x2) / 2 *
                             std::pow((y1 + y2) / 2, p - 1.0)});
    UpperHyperbolaBound ub = upper_hyperbola_bound(x1, y1, x2, y2, p, A);
    chord_ok = chord_ok && ub.bound_ok;
    worst_margin = std::max(worst_margin, ub.sup / (std::pow(2.0, p) * A));
  }

  w.key("hyperbola");
  w.begin_object();
  w.field("b1", hp.b1);
  w.field("b2", hp.b2);
  w.field("a1", hp.a1);
  w.field("a2", hp.a2);
  w.field("worst_chord_fraction", worst_margin);
  w.end_object();
  checks.add("hyperbola_oracle", oracle_ok);
  checks.add("hyperbola_identities", identity_ok);
  checks.add("hyperbola_chords", chord_ok);
}

void write_section_twoweight(JsonWriter& w, Checks& checks, double p,
                             std::uint64_t seed) {
  TwoWeightReport rep = two_weight_counterexample(p, {1e2, 1e4, 1e6}, seed);
  bool slope_ok = std::abs(rep.slope_vs_logT - 1.0) <= 0.1;
  bool tail_ok = rep.tail_ratio_lo > 0 && rep.tail_ratio_hi < 1e3;

  w.key("twoweight");
  w.begin_object();
  w.field("p", p);
  w.field("ap_sampled", rep.ap_sampled_sup);
  w.field("samples", rep.samples);
  w.key("norm_integrals");
  w.begin_array();
  for (double v : rep.norm_integrals) w.value(v);
  w.end_array();
  w.field("slope_vs_logT", rep.slope_vs_logT);
  w.field("tail_ratio_lo", rep.tail_ratio_lo);
  w.field("tail_ratio_hi", rep.tail_ratio_hi);
  w.end_object();
  checks.add("twoweight_quadrature", rep.quadrature_ok);
  checks.add("twoweight_slope", slope_ok);
  checks.add("twoweight_tail", tail_ok);
}

void write_section_nazarov(JsonWriter& w, Checks& checks, double p, double eps,
                           std::uint64_t seed) {
  double delta = delta_for_epsilon(eps);
  // mild two-valued seed; walk order chosen so the smoothness lands under
  // 1 + delta (cubed one-step contraction)
  double Q = 1.02;
  HyperbolaPoints hp = lower_hyperbola_solve(Q, 1.0, p);
  double s0 = std::max(hp.a1 / hp.a2, hp.b2 / hp.b1);
  double target = std::cbrt(1.0 + delta) - 1.0;
  int d = 0;
  for (int cand = 1; cand <= 64 && d == 0; ++cand)
    if ((s0 - 1.0) / cand <= target) d = cand;
  usage_check(d > 0, "--eps too tight for the desk-scale walk orders");

  TwoValuedParams params;
  params.p = p;
  params.Q = Q;
  params.d = d;
  TwoValuedArtifacts art = two_valued_artifacts(params);
  NazarovReport rep =
      nazarov_transfer_check(art.w_step, art.sigma_step, p, delta, eps, seed);

  w.key("nazarov");
  w.begin_object();
  w.field("p", p);
  w.field("eps", eps);
  w.field("delta", delta);
  w.field("Q", Q);
  w.field("d", d);
  w.field("ssd_w", rep.ssd_w);
  w.field("ssd_sigma", rep.ssd_sigma);
  w.field("worst_endpoint_ratio", rep.worst_endpoint_ratio);
  w.field("worst_halves_ratio", rep.worst_halves_ratio);
  w.field("dyadic_char", rep.dyadic_char);
  w.field("sampled_char", rep.sampled_char);
  w.field("samples", rep.samples);
  w.end_object();
  checks.add("nazarov_smoothness", rep.smoothness_ok);
  checks.add("nazarov_claim", rep.claim_ok);
  checks.add("nazarov_halves", rep.halves_ok);
  checks.add("nazarov_lemma2", rep.lemma2_ok);
}

int run_verify_appendix(const std::string& section, double p, double eps,
                        std::uint64_t seed, const std::string& json_path) {
  usage_check(section.empty() || section == "walks" || section == "hyperbola" ||
                  section == "twoweight" || section == "nazarov",
              "--section must be walks, hyperbola, twoweight or nazarov");
  Checks checks;
  JsonWriter w;
  w.begin_object();
  w.field("schema_version", kSchemaVersion);
  w.field("command", std::string_view("verify-appendix"));
  w.field("section", std::string_view(section.empty() ? "all" : section));
  w.field("seed", static_cast<std::int64_t>(seed));
  if (section.empty() || section == "walks")
    write_section_walks(w, checks, seed);
  if (section.empty() || section == "hyperbola")
    write_section_hyperbola(w, checks, seed);
  if (section.empty() || section == "twoweight")
    write_section_twoweight(w, checks, p, seed);
  if (section.empty() || section == "nazarov")
    write_section_nazarov(w, checks, p, eps, seed);
  checks.write(w);
  w.end_object();
  emit(w.str(), json_path);
  return checks.all_ok() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// sweep: run a pipeline over a parameter list, one CSV row per run.

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t pos = 0;
      double v = std::stod(item, &pos);
      usage_check(pos == item.size(), std::string(flag) + ": bad entry " + item);
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw UsageError(std::string(flag) + ": bad entry " + item);
    }
  }
  usage_check(!out.empty(), std::string(flag) + ": empty list");
  return out;
}

int run_sweep(const std::string& pipeline, double p, const std::string& m_list,
              const std::string& q_list, int threads, std::uint64_t seed,
              const std::string& json_path, const std::string& csv_path) {
  usage_check(pipeline == "hilbert" || pipeline == "two-valued",
              "--pipeline must be hilbert or two-valued");
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"p", "M", "value", "ratio", "leftover", "seed"});
  bool all_ok = true;

  JsonWriter w;
  w.begin_object();
  w.field("schema_version", kSchemaVersion);
  w.field("command", std::string_view("sweep"));
  w.field("pipeline", std::string_view(pipeline));
  w.field("p", p);
  w.key("runs");
  w.begin_array();

  if (pipeline == "hilbert") {
    for (double M : parse_list(m_list, "--M")) {
      HilbertParams params;
      params.p = p;
      params.M = M;
      params.threads = threads;
      params.seed = seed;
      HilbertReport rep = hilbert_example(params);
      all_ok = all_ok && rep.cross_ok && rep.main_ok && rep.step1_ok &&
               rep.identity_ok;
      rows.push_back({fmt_double(p), fmt_double(M),
                      fmt_double(std::abs(rep.total_pairing)),
                      fmt_double(rep.ratio_to_M), fmt_double(rep.leftover),
                      std::to_string(seed)});
      w.begin_object();
      w.field("M", M);
      w.field("value", std::abs(rep.total_pairing));
      w.field("ratio", rep.ratio_to_M);
      w.field("leftover", rep.leftover);
      w.end_object();
    }
  } else {
    // the M column carries Q for the two-valued sweep (fixed CSV schema)
    for (double Q : parse_list(q_list.empty() ? m_list : q_list, "--Q")) {
      TwoValuedParams params;
      params.p = p;
      params.Q = Q;
      params.seed = seed;
      TwoValuedReport rep = two_valued_weight(params);
      all_ok = all_ok && rep.cardinality_ok && rep.window_ok && rep.smooth_ok;
      rows.push_back({fmt_double(p), fmt_double(Q), fmt_double(rep.ap_out),
                      fmt_double(rep.ap_out / Q), fmt_double(rep.leftover),
                      std::to_string(seed)});
      w.begin_object();
      w.field("Q", Q);
      w.field("value", rep.ap_out);
      w.field("ratio", rep.ap_out / Q);
      w.field("leftover", rep.leftover);
      w.end_object();
    }
  }

  w.end_array();
  w.field("pass", all_ok);
  w.end_object();
  emit(w.str(), json_path);
  emit_csv(rows, csv_path);
  return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// report: reload an emitted JSON report, print a summary, aggregate verdicts.

int run_report(const std::string& path) {
  std::ifstream in(path);
  usage_check(static_cast<bool>(in), "cannot open report " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("report parse: " + std::string(e.what()));
  }
  usage_check(doc.is_object() && doc.contains("schema_version"),
              "not a report document");
  int version = doc["schema_version"].get<int>();
  if (version != kSchemaVersion)
    throw Error("unsupported schema_version " + std::to_string(version));

  std::string kind = doc.contains("command")
                         ? doc["command"].get<std::string>()
                         : doc.value("pipeline", std::string("unknown"));
  std::cout << "report: " << kind << "\n";
  int failed = 0, total = 0;
  for (const char* block : {"checks", "gates"}) {
    if (!doc.contains(block)) continue;
    for (const auto& [name, val] : doc[block].items()) {
      if (!val.is_boolean()) continue;
      ++total;
      bool ok = val.get<bool>();
      failed += ok ? 0 : 1;
      std::cout << "  " << (ok ? "PASS" : "FAIL") << " " << name << "\n";
    }
  }
  if (total == 0) std::cout << "  (no checks recorded)\n";
  std::cout << (failed == 0 ? "pass" : "fail") << " (" << (total - failed)
            << "/" << total << ")\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dyadic weight laboratory"};
  app.require_subcommand(1);

  // shared flags, reachable from every subcommand through fallthrough
  double p = 2.0;
  double M = 4.0;
  double Q = 4.0;
  int d = 0;  // 0 = per-command default
  int steps = 0;
  int budget = 1 << 14;
  double cap_mult = 1.0;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string json_path, csv_path;
  app.add_option("--p", p, "integrability exponent (> 1)");
  app.add_option("--M", M, "characteristic scale (> 2)");
  app.add_option("--Q", Q, "two-valued characteristic target (> 1)");
  app.add_option("--d", d, "walk order");
  app.add_option("--steps", steps, "remodeling steps");
  app.add_option("--budget", budget, "frequency cell budget per periodisation");
  app.add_option("--cap", cap_mult, "generation-cap multiplier");
  app.add_option("--seed", seed, "root seed for every stochastic component");
  app.add_option("--threads", threads, "worker cap (0 = hardware)");
  app.add_option("--json", json_path, "write the JSON report here");
  app.add_option("--csv", csv_path, "write the CSV flattening here");

  // build
  auto* cmd_build = app.add_subcommand("build", "power-scale weight pair");
  cmd_build->fallthrough();
  std::string build_variant = "shift";
  cmd_build->add_option("--variant", build_variant,
                        "test-function pair: mult or shift");

  // transform
  auto* cmd_transform = app.add_subcommand("transform", "rearrangements");
  cmd_transform->fallthrough();
  cmd_transform->require_subcommand(1);
  auto* cmd_small = cmd_transform->add_subcommand(
      "small-step", "d-th order walk rearrangement");
  cmd_small->fallthrough();
  std::string small_variant = "generic";
  cmd_small->add_option("--variant", small_variant, "generic or triangle");
  cmd_small->add_option("--cap-mult", cap_mult,
                        "multiplier on the default generation cap");
  auto* cmd_remodel =
      cmd_transform->add_subcommand("remodel", "iterated remodeling");
  cmd_remodel->fallthrough();
  int default_N = 3;
  std::string schedule_path;
  double chase_mass = 0x1p-6;
  cmd_remodel->add_option("--default-N", default_N,
                          "frequency when no schedule entry matches");
  cmd_remodel->add_option("--schedule", schedule_path,
                          "JSON map of interval key gen:idx to N");
  cmd_remodel->add_option("--chase-mass", chase_mass,
                          "relative chase cutoff in (0, 1/8]");

  // measure
  auto* cmd_measure =
      app.add_subcommand("measure", "characteristics of the built pair");
  cmd_measure->fallthrough();
  std::string measure_variant = "shift";
  cmd_measure->add_option("--variant", measure_variant, "mult or shift");

  // pipeline
  auto* cmd_pipeline = app.add_subcommand("pipeline", "end-to-end examples");
  cmd_pipeline->fallthrough();
  cmd_pipeline->require_subcommand(1);
  auto* cmd_hilbert = cmd_pipeline->add_subcommand(
      "hilbert", "smooth one-weight example for the Hilbert transform");
  cmd_hilbert->fallthrough();
  double hilbert_chase = 0x1p-4;
  cmd_hilbert->add_option("--chase-mass", hilbert_chase,
                          "relative chase cutoff in (0, 1/8]");
  auto* cmd_sarason =
      cmd_pipeline->add_subcommand("sarason", "direct sum of singularities");
  cmd_sarason->fallthrough();
  int k_max = 4;
  cmd_sarason->add_option("--kmax", k_max, "number of glued copies (<= 6)");
  auto* cmd_twoval = cmd_pipeline->add_subcommand(
      "two-valued", "two-valued weight of prescribed characteristic");
  cmd_twoval->fallthrough();
  double eps = 0;
  int freq_N = 3;
  auto* opt_eps = cmd_twoval->add_option(
      "--eps", eps, "smoothness target; picks the walk order");
  cmd_twoval->add_option("--N", freq_N, "uniform remodeling frequency");

  // verify
  auto* cmd_verify = app.add_subcommand("verify", "standalone lemma checks");
  cmd_verify->fallthrough();
  cmd_verify->require_subcommand(1);
  auto* cmd_vh = cmd_verify->add_subcommand(
      "hilbert-lemma", "pairing engine and one-sided lemmas");
  cmd_vh->fallthrough();
  auto* cmd_va = cmd_verify->add_subcommand("appendix", "auxiliary lemmas");
  cmd_va->fallthrough();
  std::string section;
  double nazarov_eps = 2.0;
  cmd_va->add_option("--section", section,
                     "walks, hyperbola, twoweight or nazarov (default all)");
  cmd_va->add_option("--eps", nazarov_eps,
                     "halves-ratio target for the nazarov section");

  // sweep
  auto* cmd_sweep = app.add_subcommand("sweep", "pipeline parameter sweep");
  cmd_sweep->fallthrough();
  std::string sweep_pipeline = "hilbert";
  std::string m_list = "4,8", q_list;
  cmd_sweep->add_option("--pipeline", sweep_pipeline, "hilbert or two-valued");
  auto* opt_mlist = cmd_sweep->add_option("--M", m_list, "comma list of M");
  cmd_sweep->add_option("--Q", q_list, "comma list of Q (two-valued)");

  // report
  auto* cmd_report =
      app.add_subcommand("report", "summarize an emitted JSON report");
  cmd_report->fallthrough();
  std::string report_path;
  cmd_report->add_option("path", report_path, "report JSON file")->required();

  // the sweep's list-valued --M shadows the scalar; CLI11 resolves to the
  // nearest definition, so drop the global one for that subcommand
  (void)opt_mlist;

  try {
    app.parse(argc, argv);

    if (*cmd_build) return run_build(p, M, build_variant, json_path);
    if (*cmd_small)
      return run_small_step(p, M, d > 0 ? d : 8, small_variant, cap_mult,
                            threads, json_path);
    if (*cmd_remodel)
      return run_remodel(p, M, steps > 0 ? steps : 1, default_N, schedule_path,
                         chase_mass, json_path);
    if (*cmd_measure) return run_measure(p, M, measure_variant, json_path,
                                         csv_path);
    if (*cmd_hilbert) {
      HilbertParams params;
      params.p = p;
      params.M = M;
      params.d = d > 0 ? d : 4;
      params.K = steps > 0 ? steps : 2;
      params.cell_budget = budget;
      params.chase_mass = hilbert_chase;
      params.threads = threads;
      params.seed = seed;
      return run_pipeline_hilbert(params, json_path);
    }
    if (*cmd_sarason) {
      SarasonParams params;
      params.p = p;
      params.k_max = k_max;
      params.d = d > 0 ? d : 4;
      params.K = steps > 0 ? steps : 2;
      params.cell_budget = budget;
      params.threads = threads;
      params.seed = seed;
      return run_pipeline_sarason(params, json_path);
    }
    if (*cmd_twoval) {
      TwoValuedParams params;
      params.p = p;
      params.Q = Q;
      params.d = d > 0 ? d : 16;
      params.N = freq_N;
      params.K = steps > 0 ? steps : 2;
      params.seed = seed;
      usage_check(!(opt_eps->count() > 0 && d > 0),
                  "--eps and --d are mutually exclusive");
      return run_pipeline_two_valued(params, eps, opt_eps->count() > 0,
                                     json_path);
    }
    if (*cmd_vh) return run_verify_hilbert(seed, threads, json_path);
    if (*cmd_va)
      return run_verify_appendix(section, p, nazarov_eps, seed, json_path);
    if (*cmd_sweep)
      return run_sweep(sweep_pipeline, p, m_list, q_list, threads, seed,
                       json_path, csv_path);
    if (*cmd_report) return run_report(report_path);
    throw UsageError("no subcommand");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
