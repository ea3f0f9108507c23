#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "odt/core.hpp"

namespace odt {

enum class SplitCriterion { gini, entropy };
std::string to_string(SplitCriterion c);
SplitCriterion split_criterion_from_string(const std::string& s);

// Feature-subset policy per split node: all features, floor(sqrt(M)), or
// ceil(f * M) for a fraction f in (0, 1].
struct MaxFeatures {
  enum class Kind { all, sqrt_count, fraction } kind = Kind::all;
  double f = 1.0;

  static MaxFeatures all() { return {Kind::all, 1.0}; }
  static MaxFeatures sqrt() { return {Kind::sqrt_count, 0.0}; }
  static MaxFeatures frac(double f) { return {Kind::fraction, f}; }
  int resolve(int n_features) const;
};

// Count given directly or as ceil(fraction * n), never below 1.
struct SampleSpec {
  bool is_fraction = true;
  double fraction = 1.0;
  int count = 1;

  static SampleSpec frac(double f) { return {true, f, 0}; }
  static SampleSpec of(int c) { return {false, 0.0, c}; }
  int resolve(int n) const;
};

struct TreeConfig {
  SplitCriterion criterion = SplitCriterion::gini;
  int max_depth = -1;  // < 0 = unlimited; 0 = root leaf
  MaxFeatures max_features = MaxFeatures::all();
  SampleSpec min_samples_leaf = SampleSpec::of(1);
  SampleSpec min_samples_split = SampleSpec::of(2);
  std::uint64_t seed = 0;
};

void validate_tree_config(const TreeConfig& cfg);

double impurity(const Eigen::Vector3i& class_counts, SplitCriterion c);

class DecisionTree : public Classifier {
 public:
  struct Node {
    int feature = -1;  // -1 = leaf
    double threshold = 0;
    int left = -1, right = -1;        // child node indices
    Eigen::Vector3i counts{0, 0, 0};  // training class counts at this node
  };

  explicit DecisionTree(TreeConfig cfg = {}) : cfg_(std::move(cfg)) {}

  void fit(const LabeledDataset& d, std::uint64_t seed) override;
  void fit(const LabeledDataset& d) { fit(d, cfg_.seed); }
  Vector3 predict_proba(const RowVector& x) const override;

  const std::vector<Node>& nodes() const { return nodes_; }
  const TreeConfig& config() const { return cfg_; }

  static DecisionTree restore(TreeConfig cfg, std::vector<Node> nodes) {
    DecisionTree t(std::move(cfg));
    t.nodes_ = std::move(nodes);
    return t;
  }

  bool uses_feature(int feature) const;
  int depth() const;

 private:
  TreeConfig cfg_;
  std::vector<Node> nodes_;
};

DecisionTree fit_tree(const LabeledDataset& d, const TreeConfig& cfg);

}  // namespace odt
