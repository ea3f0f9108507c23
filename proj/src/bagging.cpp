#include "odt/bagging.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "odt/rng.hpp"

namespace odt {

namespace {
constexpr std::uint64_t kBaggingStream = 0x62616767696e67ULL;  // "bagging"
}

BaseSpec BaseSpec::knn(int k) {
  BaseSpec b;
  b.kind = Kind::knn;
  b.knn_k = k;
  return b;
}

BaseSpec BaseSpec::of_tree(TreeConfig cfg) {
  BaseSpec b;
  b.kind = Kind::tree;
  b.tree = std::move(cfg);
  return b;
}

BaseSpec BaseSpec::of_forest(ForestConfig cfg) {
  BaseSpec b;
  b.kind = Kind::forest;
  b.forest = std::move(cfg);
  return b;
}

void validate_bagging_config(const BaggingConfig& cfg) {
  if (cfg.n_estimators < 1) throw std::invalid_argument("bagging: n_estimators must be >= 1");
  if (!(cfg.max_features > 0.0 && cfg.max_features <= 1.0))
    throw std::invalid_argument("bagging: max_features must lie in (0, 1]");
  if (!(cfg.max_samples > 0.0 && cfg.max_samples <= 1.0))
    throw std::invalid_argument("bagging: max_samples must lie in (0, 1]");
  switch (cfg.base.kind) {
    case BaseSpec::Kind::knn:
      if (cfg.base.knn_k < 1) throw std::invalid_argument("bagging: base knn k must be >= 1");
      break;
    case BaseSpec::Kind::tree:
      validate_tree_config(cfg.base.tree);
      break;
    case BaseSpec::Kind::forest:
      validate_forest_config(cfg.base.forest);
      break;
  }
}

namespace {

std::unique_ptr<Classifier> make_base(const BaseSpec& spec) {
  switch (spec.kind) {
    case BaseSpec::Kind::knn:
      return std::make_unique<KnnClassifier>(spec.knn_k);
    case BaseSpec::Kind::tree:
      return std::make_unique<DecisionTree>(spec.tree);
    case BaseSpec::Kind::forest:
      return std::make_unique<RandomForest>(spec.forest);
  }
  throw std::logic_error("unreachable base kind");
}

}  // namespace

void BaggingClassifier::fit(const LabeledDataset& d, std::uint64_t seed) {
  validate_bagging_config(cfg_);
  auto violations = training_violations(d);
  if (!violations.empty()) throw std::invalid_argument("fit_bagging: invalid dataset: " + violations.front());
  const int n = static_cast<int>(d.rows());
  const int m = static_cast<int>(d.cols());
  if (n < 1) throw std::invalid_argument("fit_bagging: empty dataset");

  const int ms = std::clamp(static_cast<int>(std::ceil(cfg_.max_samples * n)), 1, n);
  const int mf = std::clamp(static_cast<int>(std::ceil(cfg_.max_features * m)), 1, m);

  cfg_.seed = seed;
  estimators_.clear();
  estimators_.reserve(static_cast<std::size_t>(cfg_.n_estimators));
  for (int e = 0; e < cfg_.n_estimators; ++e) {
    const std::uint64_t es = derive_seed(seed, kBaggingStream, static_cast<std::uint64_t>(e));
    Rng rng(es);

    std::vector<int> rows(static_cast<std::size_t>(ms));
    if (cfg_.bootstrap) {
      for (auto& r : rows) r = static_cast<int>(rng.uniform_int(0, n - 1));
    } else if (ms == n) {
      std::iota(rows.begin(), rows.end(), 0);  // identity, original order
    } else {
      rows = rng.sample_without_replacement(n, ms);
      std::sort(rows.begin(), rows.end());
    }

    std::vector<int> cols(static_cast<std::size_t>(mf));
    if (cfg_.bootstrap_features) {
      for (auto& c : cols) c = static_cast<int>(rng.uniform_int(0, m - 1));
      std::sort(cols.begin(), cols.end());
    } else if (mf == m) {
      std::iota(cols.begin(), cols.end(), 0);
    } else {
      cols = rng.sample_without_replacement(m, mf);
      std::sort(cols.begin(), cols.end());
    }

    LabeledDataset sub;
    sub.X.resize(ms, mf);
    sub.y.resize(static_cast<std::size_t>(ms));
    for (int j = 0; j < mf; ++j) sub.meta.push_back(d.meta[static_cast<std::size_t>(cols[static_cast<std::size_t>(j)])]);
    for (int i = 0; i < ms; ++i) {
      int r = rows[static_cast<std::size_t>(i)];
      for (int j = 0; j < mf; ++j) sub.X(i, j) = d.X(r, cols[static_cast<std::size_t>(j)]);
      sub.y[static_cast<std::size_t>(i)] = d.y[static_cast<std::size_t>(r)];
    }

    Estimator est;
    est.model = make_base(cfg_.base);
    est.model->fit(sub, derive_seed(es, kBaggingStream, 1));
    est.cols = std::move(cols);
    estimators_.push_back(std::move(est));
  }
}

Vector3 BaggingClassifier::predict_proba(const RowVector& x) const {
  if (estimators_.empty()) throw std::logic_error("predict on an unfitted bagging ensemble");
  Vector3 acc = Vector3::Zero();
  RowVector sub;
  for (const auto& est : estimators_) {
    sub.resize(static_cast<Eigen::Index>(est.cols.size()));
    for (std::size_t j = 0; j < est.cols.size(); ++j)
      sub[static_cast<Eigen::Index>(j)] = x[est.cols[j]];
    acc += est.model->predict_proba(sub);
  }
  return acc / static_cast<double>(estimators_.size());
}

const std::vector<int>& BaggingClassifier::columns_of(int estimator) const {
  return estimators_.at(static_cast<std::size_t>(estimator)).cols;
}

const Classifier& BaggingClassifier::base_of(int estimator) const {
  return *estimators_.at(static_cast<std::size_t>(estimator)).model;
}

BaggingClassifier fit_bagging(const LabeledDataset& d, const BaggingConfig& cfg) {
  BaggingClassifier c(cfg);
  c.fit(d, cfg.seed);
  return c;
}

}  // namespace odt
