#include "odt/forest.hpp"

#include <stdexcept>

#include "odt/rng.hpp"

namespace odt {

namespace {
constexpr std::uint64_t kForestStream = 0x666f72657374ULL;  // "forest"
}

void validate_forest_config(const ForestConfig& cfg) {
  if (cfg.n_estimators < 1) throw std::invalid_argument("forest: n_estimators must be >= 1");
  validate_tree_config(cfg.tree);
}

void RandomForest::fit(const LabeledDataset& d, std::uint64_t seed) {
  validate_forest_config(cfg_);
  auto violations = training_violations(d);
  if (!violations.empty()) throw std::invalid_argument("fit_forest: invalid dataset: " + violations.front());
  const int n = static_cast<int>(d.rows());
  if (n < 1) throw std::invalid_argument("fit_forest: empty dataset");

  cfg_.seed = seed;
  trees_.clear();
  trees_.reserve(static_cast<std::size_t>(cfg_.n_estimators));
  LabeledDataset sample;
  sample.meta = d.meta;
  sample.X.resize(n, d.X.cols());
  sample.y.resize(static_cast<std::size_t>(n));
  for (int e = 0; e < cfg_.n_estimators; ++e) {
    const std::uint64_t es = derive_seed(seed, kForestStream, static_cast<std::uint64_t>(e));
    Rng rng(es);
    for (int i = 0; i < n; ++i) {
      int r = static_cast<int>(rng.uniform_int(0, n - 1));
      sample.X.row(i) = d.X.row(r);
      sample.y[static_cast<std::size_t>(i)] = d.y[static_cast<std::size_t>(r)];
    }
    DecisionTree t(cfg_.tree);
    t.fit(sample, derive_seed(es, kForestStream, 1));
    trees_.push_back(std::move(t));
  }
}

Vector3 RandomForest::predict_proba(const RowVector& x) const {
  if (trees_.empty()) throw std::logic_error("predict on an unfitted forest");
  Vector3 acc = Vector3::Zero();
  for (const auto& t : trees_) acc += t.predict_proba(x);
  return acc / static_cast<double>(trees_.size());
}

RandomForest fit_forest(const LabeledDataset& d, const ForestConfig& cfg) {
  RandomForest f(cfg);
  f.fit(d, cfg.seed);
  return f;
}

}  // namespace odt
