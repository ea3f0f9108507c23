#pragma once
#include <cstdint>
#include <vector>

#include "odt/tree.hpp"

namespace odt {

struct ForestConfig {
  int n_estimators = 100;
  TreeConfig tree;  // per-tree settings; forest bootstrap is always on
  std::uint64_t seed = 0;
};

void validate_forest_config(const ForestConfig& cfg);

class RandomForest : public Classifier {
 public:
  explicit RandomForest(ForestConfig cfg = {}) : cfg_(std::move(cfg)) {}

  void fit(const LabeledDataset& d, std::uint64_t seed) override;
  Vector3 predict_proba(const RowVector& x) const override;

  const std::vector<DecisionTree>& trees() const { return trees_; }
  const ForestConfig& config() const { return cfg_; }

  static RandomForest restore(ForestConfig cfg, std::vector<DecisionTree> trees) {
    RandomForest f(std::move(cfg));
    f.trees_ = std::move(trees);
    return f;
  }


 private:
  ForestConfig cfg_;
  std::vector<DecisionTree> trees_;
};

RandomForest fit_forest(const LabeledDataset& d, const ForestConfig& cfg);

}  // namespace odt
