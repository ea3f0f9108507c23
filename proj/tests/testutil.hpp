#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "odt/core.hpp"
#include "odt/rng.hpp"

namespace odt::testutil {

/// Three well-separated Gaussian blobs over m features; the last feature is
/// the constant 5.0 (a dummy for attribution tests). Rows are class-ordered.
inline LabeledDataset make_blobs(int per_class, std::uint64_t seed, int m = 8) {
  Rng rng(seed);
  const int n = per_class * 3;
  LabeledDataset d;
  d.X = Matrix(n, m);
  int r = 0;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_class; ++i, ++r) {
      for (int j = 0; j < m - 1; ++j) d.X(r, j) = 10.0 * c + rng.normal(0.0, 1.0);
      d.X(r, m - 1) = 5.0;
      d.y.push_back(c);
    }
  }
  for (int j = 0; j < m; ++j) d.meta.push_back({"f" + std::to_string(j), FeatureKind::continuous});
  return d;
}

/// Fixed-response stub; handy for metric and CV plumbing tests.
class ConstantClassifier : public Classifier {
 public:
  explicit ConstantClassifier(int cls = 0) : cls_(cls) {}
  void fit(const LabeledDataset&, std::uint64_t) override {}
  Vector3 predict_proba(const RowVector&) const override {
    Vector3 p = Vector3::Zero();
    p(cls_) = 1.0;
    return p;
  }

 private:
  int cls_;
};

class ThrowingClassifier : public Classifier {
 public:
  void fit(const LabeledDataset&, std::uint64_t) override {
    throw std::runtime_error("deliberate fit failure");
  }
  Vector3 predict_proba(const RowVector&) const override { return Vector3::Constant(1.0 / 3); }
};

}  // namespace odt::testutil
