#include "cexlab/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <utility>
#include <variant>

#include "cexlab/report.hpp"
#include "json.hpp"

namespace cexlab {

DyadicInterval::DyadicInterval(int g, std::uint64_t i) : gen(g), idx(i) {
  require(g >= 0 && g <= kMaxGen, "dyadic generation out of range");
  require(i < (std::uint64_t{1} << g), "dyadic index out of range");
}

double DyadicInterval::measure() const { return std::ldexp(1.0, -gen); }

double DyadicInterval::left_endpoint() const {
  return std::ldexp(static_cast<double>(idx), -gen);
}

double DyadicInterval::right_endpoint() const {
  return std::ldexp(static_cast<double>(idx + 1), -gen);
}

DyadicInterval DyadicInterval::left() const { return {gen + 1, 2 * idx}; }

DyadicInterval DyadicInterval::right() const { return {gen + 1, 2 * idx + 1}; }

DyadicInterval DyadicInterval::parent() const {
  require(gen > 0, "root interval has no parent");
  return {gen - 1, idx >> 1};
}

DyadicInterval DyadicInterval::sibling() const {
  require(gen > 0, "root interval has no sibling");
  return {gen, idx ^ 1};
}

bool DyadicInterval::is_right_child() const {
  require(gen > 0, "root interval is not a child");
  return (idx & 1) != 0;
}

bool DyadicInterval::contains(const DyadicInterval& other) const {
  return other.gen >= gen && (other.idx >> (other.gen - gen)) == idx;
}

std::uint64_t DyadicInterval::scaled_left(int g) const {
  require(g >= gen && g <= 63, "scaled endpoint generation out of range");
  return idx << (g - gen);
}

std::string DyadicInterval::key() const {
  return std::to_string(gen) + ":" + std::to_string(idx);
}

DyadicInterval DyadicInterval::parse_key(const std::string& key) {
  auto colon = key.find(':');
  if (colon == std::string::npos) throw UsageError("interval key must be gen:idx");
  int g = 0;
  std::uint64_t i = 0;
  auto r1 = std::from_chars(key.data(), key.data() + colon, g);
  auto r2 = std::from_chars(key.data() + colon + 1, key.data() + key.size(), i);
  if (r1.ec != std::errc{} || r2.ec != std::errc{} ||
      r1.ptr != key.data() + colon || r2.ptr != key.data() + key.size()) {
    throw UsageError("interval key must be gen:idx");
  }
  if (g < 0 || g > DyadicInterval::kMaxGen || i >= (std::uint64_t{1} << g)) {
    throw UsageError("interval key out of range: " + key);
  }
  return {g, i};
}

NodePtr make_leaf(const std::vector<double>& vals, bool frozen) {
  require(!vals.empty() && vals.size() <= 4, "leaf must carry 1..4 components");
  auto n = std::make_shared<Node>();
  n->dim = static_cast<std::uint8_t>(vals.size());
  std::copy(vals.begin(), vals.end(), n->vals.begin());
  n->frozen = frozen;
  return n;
}

NodePtr make_leaf(std::initializer_list<double> vals, bool frozen) {
  return make_leaf(std::vector<double>(vals), frozen);
}

NodePtr make_branch(const NodePtr& l, const NodePtr& r) {
  require(l && r, "branch child missing");
  require(l->dim == r->dim, "branch children dimension mismatch");
  auto n = std::make_shared<Node>();
  n->l = l;
  n->r = r;
  n->dim = l->dim;
  n->depth = 1 + std::max(l->depth, r->depth);
  for (int c = 0; c < n->dim; ++c) n->vals[c] = 0.5 * (l->vals[c] + r->vals[c]);
  return n;
}

double node_haar(const Node* n, int c) {
  if (n->is_leaf()) return 0.0;
  return 0.5 * (n->r->vals[c] - n->l->vals[c]);
}

namespace {

// Walks toward I; stops early at leaves. reached reports how many levels
// were actually taken.
const Node* walk(const NodePtr& root, const DyadicInterval& I, int* reached) {
  const Node* n = root.get();
  int level = 0;
  while (level < I.gen && !n->is_leaf()) {
    int bit = static_cast<int>((I.idx >> (I.gen - level - 1)) & 1);
    n = bit ? n->r.get() : n->l.get();
    ++level;
  }
  if (reached) *reached = level;
  return n;
}

}  // namespace

const Node* descend(const NodePtr& root, const DyadicInterval& I) {
  return walk(root, I, nullptr);
}

double memo_fold(const NodePtr& root,
                 const std::function<double(const Node*)>& leaf_value,
                 const std::function<double(const Node*, double, double)>& branch_value) {
  return memo_fold_map(root, leaf_value, branch_value).at(root.get());
}

std::unordered_map<const Node*, double> memo_fold_map(
    const NodePtr& root,
    const std::function<double(const Node*)>& leaf_value,
    const std::function<double(const Node*, double, double)>& branch_value) {
  require(root != nullptr, "fold on empty tree");
  std::unordered_map<const Node*, double> memo;
  std::vector<std::pair<const Node*, bool>> stack;
  stack.emplace_back(root.get(), false);
  while (!stack.empty()) {
    auto [n, ready] = stack.back();
    stack.pop_back();
    if (memo.count(n)) continue;
    if (n->is_leaf()) {
      memo.emplace(n, leaf_value(n));
    } else if (!ready) {
      stack.emplace_back(n, true);
      if (!memo.count(n->r.get())) stack.emplace_back(n->r.get(), false);
      if (!memo.count(n->l.get())) stack.emplace_back(n->l.get(), false);
    } else {
      memo.emplace(n, branch_value(n, memo.at(n->l.get()), memo.at(n->r.get())));
    }
  }
  return memo;
}

std::int64_t expanded_node_count(const NodePtr& root, std::int64_t cap) {
  require(cap > 0, "node count cap must be positive");
  double capd = static_cast<double>(cap);
  double v = memo_fold(
      root, [](const Node*) { return 1.0; },
      [capd](const Node*, double a, double b) {
        return std::min(capd, 1.0 + a + b);
      });
  return static_cast<std::int64_t>(v);
}

std::int64_t shared_node_count(const NodePtr& root) {
  std::int64_t count = 0;
  memo_fold(
      root,
      [&](const Node*) {
        ++count;
        return 0.0;
      },
      [&](const Node*, double, double) {
        ++count;
        return 0.0;
      });
  return count;
}

double frozen_mass(const NodePtr& root) {
  return memo_fold(
      root, [](const Node* n) { return n->frozen ? 1.0 : 0.0; },
      [](const Node*, double a, double b) { return 0.5 * (a + b); });
}

std::vector<FlatCell> flatten(const NodePtr& root, std::size_t max_cells) {
  require(root != nullptr, "flatten on empty tree");
  std::vector<FlatCell> out;
  std::vector<std::pair<const Node*, DyadicInterval>> stack;
  stack.emplace_back(root.get(), DyadicInterval{});
  while (!stack.empty()) {
    auto [n, cell] = stack.back();
    stack.pop_back();
    if (n->is_leaf()) {
      require(out.size() < max_cells, "flatten exceeds cell budget");
      out.push_back({cell, n->vals});
    } else {
      require(cell.gen < DyadicInterval::kMaxGen, "flatten deeper than representable cells");
      stack.emplace_back(n->r.get(), cell.right());
      stack.emplace_back(n->l.get(), cell.left());
    }
  }
  return out;
}

AdaptiveTree::AdaptiveTree(NodePtr root, int depth_cap)
    : root_(std::move(root)), depth_cap_(depth_cap) {
  require(root_ != nullptr, "tree requires a root");
  require(depth_cap_ >= 0, "depth cap must be nonnegative");
}

int AdaptiveTree::dim() const {
  require(root_ != nullptr, "empty tree");
  return root_->dim;
}

std::vector<double> AdaptiveTree::average(const DyadicInterval& I) const {
  const Node* n = walk(root_, I, nullptr);
  return std::vector<double>(n->vals.begin(), n->vals.begin() + dim());
}

std::vector<double> AdaptiveTree::haar_coeff(const DyadicInterval& I) const {
  int reached = 0;
  const Node* n = walk(root_, I, &reached);
  std::vector<double> out(dim(), 0.0);
  if (reached == I.gen && !n->is_leaf()) {
    for (int c = 0; c < dim(); ++c) out[c] = node_haar(n, c);
  }
  return out;
}

AdaptiveTree AdaptiveTree::martingale_diff(const DyadicInterval& I) const {
  auto h = haar_coeff(I);
  int d = dim();
  std::vector<double> zero(d, 0.0), neg(d), pos(d);
  for (int c = 0; c < d; ++c) {
    neg[c] = -h[c];
    pos[c] = h[c];
  }
  std::function<NodePtr(int)> build = [&](int g) -> NodePtr {
    if (g == I.gen) return make_branch(make_leaf(neg), make_leaf(pos));
    int bit = static_cast<int>((I.idx >> (I.gen - g - 1)) & 1);
    NodePtr sub = build(g + 1);
    NodePtr z = make_leaf(zero);
    return bit ? make_branch(z, sub) : make_branch(sub, z);
  };
  return AdaptiveTree(build(0), depth_cap_);
}

namespace {

struct MoveEntry {
  std::uint64_t start, end;  // scaled to the common generation
  NodePtr repl;
};

NodePtr rebuild_with_moves(const NodePtr& node, std::uint64_t cell_start,
                           std::uint64_t cell_end,
                           const std::vector<MoveEntry>& entries, std::size_t first,
                           std::size_t last) {
  if (first == last) return node;
  const MoveEntry& e = entries[first];
  if (last - first == 1 && e.start == cell_start && e.end == cell_end) {
    return e.repl;
  }
  std::uint64_t mid = cell_start + (cell_end - cell_start) / 2;
  NodePtr l = node->is_leaf() ? node : node->l;
  NodePtr r = node->is_leaf() ? node : node->r;
  std::size_t split = first;
  while (split < last && entries[split].end <= mid) ++split;
  require(split == last || entries[split].start >= mid,
          "rearrangement target straddles a dyadic cell");
  return make_branch(rebuild_with_moves(l, cell_start, mid, entries, first, split),
                     rebuild_with_moves(r, mid, cell_end, entries, split, last));
}

}  // namespace

AdaptiveTree AdaptiveTree::compose_rearrangement(
    const std::vector<RearrangePair>& plan) const {
  if (plan.empty()) return *this;
  int gmax = 0;
  for (const auto& pr : plan) {
    require(pr.source.gen == pr.target.gen,
            "rearrangement pair has mismatched measures");
    gmax = std::max(gmax, pr.source.gen);
  }
  require(gmax <= depth_cap_, "rearrangement deeper than the depth cap");

  auto ranges = [&](bool use_target) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> v;
    v.reserve(plan.size());
    for (const auto& pr : plan) {
      const DyadicInterval& I = use_target ? pr.target : pr.source;
      std::uint64_t s = I.scaled_left(gmax);
      v.emplace_back(s, s + (std::uint64_t{1} << (gmax - I.gen)));
    }
    std::sort(v.begin(), v.end());
    return v;
  };
  auto src = ranges(false);
  auto tgt = ranges(true);
  for (std::size_t i = 1; i < plan.size(); ++i) {
    require(src[i - 1].second <= src[i].first, "rearrangement sources overlap");
    require(tgt[i - 1].second <= tgt[i].first, "rearrangement targets overlap");
  }
  auto merged = [](std::vector<std::pair<std::uint64_t, std::uint64_t>> v) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> m;
    for (const auto& r : v) {
      if (!m.empty() && m.back().second == r.first) {
        m.back().second = r.second;
      } else {
        m.push_back(r);
      }
    }
    return m;
  };
  require(merged(src) == merged(tgt),
          "rearrangement source and target unions differ");

  std::vector<MoveEntry> entries;
  entries.reserve(plan.size());
  for (const auto& pr : plan) {
    const Node* sub = walk(root_, pr.source, nullptr);
    // Subtrees are scale-free, so a transplant onto an equal-measure cell is
    // exactly the piecewise translation.
    NodePtr repl(root_, sub);  // aliasing: shares ownership with the whole tree
    std::uint64_t s = pr.target.scaled_left(gmax);
    entries.push_back({s, s + (std::uint64_t{1} << (gmax - pr.target.gen)), repl});
  }
  std::sort(entries.begin(), entries.end(),
            [](const MoveEntry& a, const MoveEntry& b) { return a.start < b.start; });
  NodePtr out = rebuild_with_moves(root_, 0, std::uint64_t{1} << gmax, entries, 0,
                                   entries.size());
  return AdaptiveTree(out, depth_cap_);
}

namespace {

void integral_rec(const Node* n, double x0, double x1, double a, double b,
                  int dim, std::vector<double>& acc) {
  if (b <= x0 || a >= x1 || x1 <= x0) return;
  if (a <= x0 && b >= x1) {
    for (int c = 0; c < dim; ++c) acc[c] += n->vals[c] * (x1 - x0);
    return;
  }
  if (n->is_leaf()) {
    double w = std::min(b, x1) - std::max(a, x0);
    if (w > 0) {
      for (int c = 0; c < dim; ++c) acc[c] += n->vals[c] * w;
    }
    return;
  }
  double mid = 0.5 * (x0 + x1);
  integral_rec(n->l.get(), x0, mid, a, b, dim, acc);
  integral_rec(n->r.get(), mid, x1, a, b, dim, acc);
}

}  // namespace

std::vector<double> AdaptiveTree::integral(double a, double b) const {
  std::vector<double> acc(dim(), 0.0);
  integral_rec(root_.get(), 0.0, 1.0, a, b, dim(), acc);
  return acc;
}

namespace {
constexpr std::int64_t kSerializeNodeLimit = 1000000;
}

std::string AdaptiveTree::to_json() const {
  require(root_ != nullptr, "empty tree");
  require(expanded_node_count(root_, kSerializeNodeLimit + 1) <= kSerializeNodeLimit,
          "tree too large to serialize");
  std::string out = "{\"dim\":" + std::to_string(dim()) + ",\"root\":";
  std::vector<std::variant<const Node*, const char*>> stack;
  stack.emplace_back(root_.get());
  while (!stack.empty()) {
    auto item = stack.back();
    stack.pop_back();
    if (std::holds_alternative<const char*>(item)) {
      out += std::get<const char*>(item);
      continue;
    }
    const Node* n = std::get<const Node*>(item);
    if (n->is_leaf()) {
      out += "{\"leaf\":[";
      for (int c = 0; c < n->dim; ++c) {
        if (c) out += ',';
        out += fmt_double(n->vals[c]);
      }
      out += "]}";
    } else {
      out += "{\"branch\":[";
      stack.emplace_back("]}");
      stack.emplace_back(n->r.get());
      stack.emplace_back(",");
      stack.emplace_back(n->l.get());
    }
  }
  out += '}';
  return out;
}

AdaptiveTree AdaptiveTree::from_json(const std::string& text, int depth_cap) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw UsageError(std::string("invalid tree json: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("dim") || !doc.contains("root")) {
    throw UsageError("tree json must be {\"dim\":..,\"root\":..}");
  }
  int dim = 0;
  try {
    dim = doc.at("dim").get<int>();
  } catch (const std::exception&) {
    throw UsageError("tree json dim must be an integer");
  }
  if (dim < 1 || dim > 4) throw UsageError("tree json dim must be 1..4");

  std::function<NodePtr(const nlohmann::json&, int)> build =
      [&](const nlohmann::json& jn, int depth) -> NodePtr {
    if (depth > depth_cap) throw UsageError("tree json exceeds the depth cap");
    if (!jn.is_object()) throw UsageError("tree json node must be an object");
    if (jn.contains("leaf")) {
      const auto& arr = jn.at("leaf");
      if (!arr.is_array() || static_cast<int>(arr.size()) != dim) {
        throw UsageError("tree json leaf arity must equal dim");
      }
      std::vector<double> vals;
      for (const auto& x : arr) {
        if (!x.is_number()) throw UsageError("tree json leaf values must be numbers");
        vals.push_back(x.get<double>());
      }
      return make_leaf(vals);
    }
    if (jn.contains("branch")) {
      const auto& arr = jn.at("branch");
      if (!arr.is_array() || arr.size() != 2) {
        throw UsageError("tree json branch must have two children");
      }
      return make_branch(build(arr[0], depth + 1), build(arr[1], depth + 1));
    }
    throw UsageError("tree json node must be a leaf or a branch");
  };
  return AdaptiveTree(build(doc.at("root"), 0), depth_cap);
}

}  // namespace cexlab
