#pragma once
#include <cstdint>

#include "odt/core.hpp"

namespace odt {

// Brute-force k-nearest-neighbours on min-max scaled features; distance ties
// break toward the lower training-row index.
class KnnClassifier : public Classifier {
 public:
  explicit KnnClassifier(int k = 5) : k_(k) {}

  void fit(const LabeledDataset& d, std::uint64_t seed) override;
  Vector3 predict_proba(const RowVector& x) const override;

  int k() const { return k_; }
  const ScalerState& scaler() const { return scaler_; }
  const Matrix& train_X() const { return X_; }
  const std::vector<int>& train_y() const { return y_; }

  static KnnClassifier restore(int k, Matrix X, std::vector<int> y, ScalerState scaler) {
    KnnClassifier c(k);
    c.X_ = std::move(X);
    c.y_ = std::move(y);
    c.scaler_ = std::move(scaler);
    return c;
  }

 private:
  int k_;
  Matrix X_;  // scaled training features
  std::vector<int> y_;
  ScalerState scaler_;
};

KnnClassifier fit_knn(const LabeledDataset& d, int k);

}  // namespace odt
