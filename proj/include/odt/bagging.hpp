#pragma once
#include <cstdint>
#include <memory>
#include <vector>

#include "odt/forest.hpp"
#include "odt/knn.hpp"
#include "odt/tree.hpp"

namespace odt {

// Pluggable base estimator for the bagging ensemble.
struct BaseSpec {
  enum class Kind { knn, tree, forest } kind = Kind::tree;
  int knn_k = 5;  // when the estimator spec omits k
  TreeConfig tree;
  ForestConfig forest;

  static BaseSpec knn(int k = 5);
  static BaseSpec of_tree(TreeConfig cfg = {});
  static BaseSpec of_forest(ForestConfig cfg);
};

struct BaggingConfig {
  BaseSpec base;
  int n_estimators = 10;
  double max_features = 1.0;  // fraction of columns, resolved ceil(f * M)
  double max_samples = 1.0;   // fraction of rows, resolved ceil(f * n)
  bool bootstrap = true;
  bool bootstrap_features = false;
  std::uint64_t seed = 0;
};

void validate_bagging_config(const BaggingConfig& cfg);

// Each estimator sees its own row sample and column subset (sampled once per
// estimator); prediction averages base probabilities. Full samples without
// bootstrap keep the original row order, so bagging(tree, n=1, full samples
// and features, no bootstrap) reproduces the single tree exactly.
class BaggingClassifier : public Classifier {
 public:
  explicit BaggingClassifier(BaggingConfig cfg = {}) : cfg_(std::move(cfg)) {}

  void fit(const LabeledDataset& d, std::uint64_t seed) override;
  Vector3 predict_proba(const RowVector& x) const override;

  const BaggingConfig& config() const { return cfg_; }
  int n_fitted() const { return static_cast<int>(estimators_.size()); }
  const std::vector<int>& columns_of(int estimator) const;
  const Classifier& base_of(int estimator) const;

  static BaggingClassifier restore(
      BaggingConfig cfg,
      std::vector<std::pair<std::unique_ptr<Classifier>, std::vector<int>>> parts) {
    BaggingClassifier c(std::move(cfg));
    for (auto& [model, cols] : parts)
      c.estimators_.push_back({std::move(model), std::move(cols)});
    return c;
  }

 private:
  struct Estimator {
    std::unique_ptr<Classifier> model;
    std::vector<int> cols;
  };
  BaggingConfig cfg_;
  std::vector<Estimator> estimators_;
};

BaggingClassifier fit_bagging(const LabeledDataset& d, const BaggingConfig& cfg);

}  // namespace odt
