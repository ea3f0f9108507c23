#include "odt/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "odt/rng.hpp"

namespace odt {

std::string to_string(SplitCriterion c) { return c == SplitCriterion::gini ? "gini" : "entropy"; }

SplitCriterion split_criterion_from_string(const std::string& s) {
  if (s == "gini") return SplitCriterion::gini;
  if (s == "entropy") return SplitCriterion::entropy;
  throw std::invalid_argument("unknown split criterion: " + s);
}

int MaxFeatures::resolve(int n_features) const {
  switch (kind) {
    case Kind::all:
      return n_features;
    case Kind::sqrt_count:
      return std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n_features))));
    case Kind::fraction:
      return std::clamp(static_cast<int>(std::ceil(f * n_features)), 1, n_features);
  }
  return n_features;
}

int SampleSpec::resolve(int n) const {
  if (!is_fraction) return count;
  return std::max(1, static_cast<int>(std::ceil(fraction * n)));
}

void validate_tree_config(const TreeConfig& cfg) {
  if (cfg.max_features.kind == MaxFeatures::Kind::fraction &&
      !(cfg.max_features.f > 0.0 && cfg.max_features.f <= 1.0))
    throw std::invalid_argument("max_features fraction must lie in (0, 1]");
  for (const auto* s : {&cfg.min_samples_leaf, &cfg.min_samples_split}) {
    if (s->is_fraction) {
      if (!(s->fraction > 0.0 && s->fraction <= 1.0))
        throw std::invalid_argument("min-sample fraction must lie in (0, 1]");
    } else if (s->count < 1) {
      throw std::invalid_argument("min-sample count must be >= 1");
    }
  }
}

double impurity(const Eigen::Vector3i& counts, SplitCriterion c) {
  const double total = counts.sum();
  if (total <= 0) throw std::invalid_argument("impurity: all-zero class counts");
  if (c == SplitCriterion::gini) {
    double s = 0;
    for (int i = 0; i < 3; ++i) {
      double p = counts[i] / total;
      s += p * p;
    }
    return 1.0 - s;
  }
  double h = 0;
  for (int i = 0; i < 3; ++i) {
    if (counts[i] == 0) continue;
    double p = counts[i] / total;
    h -= p * std::log2(p);
  }
  return h;
}

namespace {

struct BuildContext {
  const Matrix& X;
  const std::vector<int>& y;
  int min_leaf;
  int min_split;
  int max_features;
  SplitCriterion criterion;
  int max_depth;
  Rng rng;
  std::vector<DecisionTree::Node>* nodes;
};

Eigen::Vector3i count_classes(const BuildContext& ctx, const std::vector<int>& rows) {
  Eigen::Vector3i c{0, 0, 0};
  for (int r : rows) c[static_cast<std::size_t>(ctx.y[static_cast<std::size_t>(r)]) % 3] += 1;
  return c;
}

struct BestSplit {
  int feature = -1;
  double threshold = 0;
  double gain = 0;
};

// Candidate thresholds are midpoints between consecutive sorted distinct
// values; ties in gain resolve to the lowest feature index, then the lowest
// threshold, by iterating in ascending order with strict improvement.
BestSplit find_best_split(BuildContext& ctx, const std::vector<int>& rows, const Eigen::Vector3i& counts) {
  const int m = static_cast<int>(ctx.X.cols());
  std::vector<int> features;
  if (ctx.max_features >= m) {
    features.resize(static_cast<std::size_t>(m));
    std::iota(features.begin(), features.end(), 0);
  } else {
    features = ctx.rng.sample_without_replacement(m, ctx.max_features);
    std::sort(features.begin(), features.end());
  }

  const double parent_imp = impurity(counts, ctx.criterion);
  const double n = static_cast<double>(rows.size());
  BestSplit best;

  std::vector<std::pair<double, int>> vals(rows.size());
  for (int f : features) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      int r = rows[i];
      vals[i] = {ctx.X(r, f), ctx.y[static_cast<std::size_t>(r)]};
    }
    std::sort(vals.begin(), vals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    Eigen::Vector3i left{0, 0, 0};
    Eigen::Vector3i right = counts;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      left[static_cast<std::size_t>(vals[i].second) % 3] += 1;
      right[static_cast<std::size_t>(vals[i].second) % 3] -= 1;
      if (vals[i].first == vals[i + 1].first) continue;  // not a value boundary
      const int nl = static_cast<int>(i) + 1;
      const int nr = static_cast<int>(rows.size()) - nl;
      if (nl < ctx.min_leaf || nr < ctx.min_leaf) continue;
      double child = (nl * impurity(left, ctx.criterion) + nr * impurity(right, ctx.criterion)) / n;
      double gain = parent_imp - child;
      if (gain > best.gain) {
        best.gain = gain;
        best.feature = f;
        best.threshold = vals[i].first + 0.5 * (vals[i + 1].first - vals[i].first);
      }
    }
  }
  return best;
}

int build_node(BuildContext& ctx, const std::vector<int>& rows, int depth) {
  auto counts = count_classes(ctx, rows);
  const int id = static_cast<int>(ctx.nodes->size());
  ctx.nodes->push_back({-1, 0.0, -1, -1, counts});

  const bool pure = (counts.array() > 0).count() <= 1;
  const bool depth_stop = ctx.max_depth >= 0 && depth >= ctx.max_depth;
  if (pure || depth_stop || static_cast<int>(rows.size()) < ctx.min_split) return id;

  BestSplit best = find_best_split(ctx, rows, counts);
  if (best.feature < 0 || !(best.gain > 0.0)) return id;

  std::vector<int> left_rows, right_rows;
  for (int r : rows) {
    (ctx.X(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
  }
  (*ctx.nodes)[static_cast<std::size_t>(id)].feature = best.feature;
  (*ctx.nodes)[static_cast<std::size_t>(id)].threshold = best.threshold;
  int left = build_node(ctx, left_rows, depth + 1);
  (*ctx.nodes)[static_cast<std::size_t>(id)].left = left;
  int right = build_node(ctx, right_rows, depth + 1);
  (*ctx.nodes)[static_cast<std::size_t>(id)].right = right;
  return id;
}

}  // namespace

void DecisionTree::fit(const LabeledDataset& d, std::uint64_t seed) {
  validate_tree_config(cfg_);
  auto violations = training_violations(d);
  if (!violations.empty()) throw std::invalid_argument("fit_tree: invalid dataset: " + violations.front());
  const int n = static_cast<int>(d.rows());
  if (n < 1) throw std::invalid_argument("fit_tree: empty dataset");

  cfg_.seed = seed;
  nodes_.clear();
  BuildContext ctx{d.X,
                   d.y,
                   cfg_.min_samples_leaf.resolve(n),
                   cfg_.min_samples_split.resolve(n),
                   cfg_.max_features.resolve(static_cast<int>(d.cols())),
                   cfg_.criterion,
                   cfg_.max_depth,
                   Rng(seed),
                   &nodes_};
  std::vector<int> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), 0);
  build_node(ctx, rows, 0);
}

Vector3 DecisionTree::predict_proba(const RowVector& x) const {
  if (nodes_.empty()) throw std::logic_error("predict on an unfitted tree");
  int id = 0;
  while (nodes_[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& nd = nodes_[static_cast<std::size_t>(id)];
    id = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  const auto& counts = nodes_[static_cast<std::size_t>(id)].counts;
  return counts.cast<double>() / static_cast<double>(counts.sum());
}

bool DecisionTree::uses_feature(int feature) const {
  for (const auto& nd : nodes_)
    if (nd.feature == feature) return true;
  return false;
}

int DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int best = 0;
  while (!stack.empty()) {
    auto [id, depth] = stack.back();
    stack.pop_back();
    best = std::max(best, depth);
    const auto& nd = nodes_[static_cast<std::size_t>(id)];
    if (nd.feature >= 0) {
      stack.push_back({nd.left, depth + 1});
      stack.push_back({nd.right, depth + 1});
    }
  }
  return best;
}

DecisionTree fit_tree(const LabeledDataset& d, const TreeConfig& cfg) {
  DecisionTree t(cfg);
  t.fit(d, cfg.seed);
  return t;
}

}  // namespace odt
