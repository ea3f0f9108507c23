#include "odt/knn.hpp"

#include <algorithm>
#include <stdexcept>

namespace odt {

void KnnClassifier::fit(const LabeledDataset& d, std::uint64_t /*seed*/) {
  if (k_ <= 0) throw std::invalid_argument("knn: k must be positive");
  auto violations = training_violations(d);
  if (!violations.empty()) throw std::invalid_argument("fit_knn: invalid dataset: " + violations.front());
  if (static_cast<Eigen::Index>(k_) > d.rows())
    throw std::invalid_argument("knn: k (" + std::to_string(k_) + ") exceeds training rows (" +
                                std::to_string(d.rows()) + ")");
  scaler_ = fit_scaler(d, ScalingKind::minmax);
  X_ = apply_scaler(scaler_, d.X);
  y_ = d.y;
}

Vector3 KnnClassifier::predict_proba(const RowVector& x) const {
  if (y_.empty()) throw std::logic_error("predict on an unfitted knn");
  if (x.cols() != X_.cols()) throw std::invalid_argument("knn: feature width mismatch");
  RowVector q = apply_scaler(scaler_, x);
  std::vector<std::pair<double, int>> dist(y_.size());
  for (Eigen::Index i = 0; i < X_.rows(); ++i) {
    dist[static_cast<std::size_t>(i)] = {(X_.row(i) - q).squaredNorm(), static_cast<int>(i)};
  }
  auto kth = dist.begin() + k_;
  std::partial_sort(dist.begin(), kth, dist.end());
  Eigen::Vector3i counts{0, 0, 0};
  for (auto it = dist.begin(); it != kth; ++it) counts[y_[static_cast<std::size_t>(it->second)]] += 1;
  return counts.cast<double>() / static_cast<double>(k_);
}

KnnClassifier fit_knn(const LabeledDataset& d, int k) {
  KnnClassifier c(k);
  c.fit(d, 0);
  return c;
}

}  // namespace odt
