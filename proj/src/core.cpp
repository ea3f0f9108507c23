#include "odt/core.hpp"

#include <cmath>
#include <stdexcept>

namespace odt {

std::string to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::continuous: return "continuous";
    case FeatureKind::discrete: return "discrete";
    case FeatureKind::binary: return "binary";
  }
  return "continuous";
}

FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "continuous") return FeatureKind::continuous;
  if (s == "discrete") return FeatureKind::discrete;
  if (s == "binary") return FeatureKind::binary;
  throw std::invalid_argument("unknown feature kind: " + s);
}

std::string to_string(ScalingKind k) {
  return k == ScalingKind::raw ? "raw" : "minmax";
}

ScalingKind scaling_kind_from_string(const std::string& s) {
  if (s == "raw") return ScalingKind::raw;
  if (s == "minmax") return ScalingKind::minmax;
  throw std::invalid_argument("unknown scaling kind: " + s);
}

bool ZoneRegistry::upsert(const ZoneProfile& p) {
  auto it = index_.find(p.da_id);
  if (it != index_.end()) {
    zones_[it->second] = p;
    return true;
  }
  index_[p.da_id] = static_cast<int>(zones_.size());
  zones_.push_back(p);
  return false;
}

const ZoneProfile* ZoneRegistry::find(const std::string& da_id) const {
  auto it = index_.find(da_id);
  return it == index_.end() ? nullptr : &zones_[it->second];
}

std::vector<std::string> validate_dataset(const LabeledDataset& d) {
  std::vector<std::string> issues;
  if (d.cols() != 8 && d.cols() != 13) {
    issues.push_back("expected 8 or 13 columns, got " + std::to_string(d.cols()));
  }
  for (auto& issue : training_violations(d)) issues.push_back(std::move(issue));
  return issues;
}

std::vector<std::string> training_violations(const LabeledDataset& d) {
  std::vector<std::string> issues;
  if (static_cast<Eigen::Index>(d.y.size()) != d.rows()) {
    issues.push_back("label count " + std::to_string(d.y.size()) + " does not match row count " +
                     std::to_string(d.rows()));
  }
  if (!d.meta.empty() && static_cast<Eigen::Index>(d.meta.size()) != d.cols()) {
    issues.push_back("feature metadata count does not match column count");
  }
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (!std::isfinite(d.X(i, j))) {
        issues.push_back("non-finite value at row " + std::to_string(i) + " col " + std::to_string(j));
      }
    }
  }
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    if (d.y[i] < 0 || d.y[i] > 2) {
      issues.push_back("label out of {0,1,2} at row " + std::to_string(i));
    }
  }
  return issues;
}

ScalerState fit_scaler(const LabeledDataset& d, ScalingKind kind) {
  ScalerState s;
  s.kind = kind;
  const auto m = d.cols();
  s.lo = Vector::Zero(m);
  s.hi = Vector::Zero(m);
  s.scaled.assign(static_cast<std::size_t>(m), 0);
  if (kind == ScalingKind::raw) return s;
  for (Eigen::Index j = 0; j < m; ++j) {
    bool continuous = d.meta.empty() || d.meta[static_cast<std::size_t>(j)].kind == FeatureKind::continuous;
    if (!continuous) continue;
    s.lo(j) = d.X.col(j).minCoeff();
    s.hi(j) = d.X.col(j).maxCoeff();
    s.scaled[static_cast<std::size_t>(j)] = 1;
    if (s.lo(j) == s.hi(j)) {
      std::string name = d.meta.empty() ? ("col " + std::to_string(j)) : d.meta[static_cast<std::size_t>(j)].name;
      s.warnings.push_back("constant continuous column '" + name + "' mapped to 0");
    }
  }
  return s;
}

Matrix apply_scaler(const ScalerState& s, const Matrix& X) {
  if (s.kind == ScalingKind::raw) return X;
  Matrix out = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (!s.scaled[static_cast<std::size_t>(j)]) continue;
    double span = s.hi(j) - s.lo(j);
    if (span == 0.0) {
      out.col(j).setZero();
    } else {
      out.col(j) = ((X.col(j).array() - s.lo(j)) / span).cwiseMax(0.0).cwiseMin(1.0);
    }
  }
  return out;
}

RowVector apply_scaler(const ScalerState& s, const RowVector& x) {
  Matrix m = apply_scaler(s, Matrix(x));
  return m.row(0);
}

Matrix invert_scaler(const ScalerState& s, const Matrix& X) {
  if (s.kind == ScalingKind::raw) return X;
  Matrix out = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (!s.scaled[static_cast<std::size_t>(j)]) continue;
    out.col(j) = X.col(j).array() * (s.hi(j) - s.lo(j)) + s.lo(j);
  }
  return out;
}

std::pair<LabeledDataset, ScalerState> scale_features(const LabeledDataset& d, ScalingKind kind) {
  ScalerState s = fit_scaler(d, kind);
  LabeledDataset out = d;
  out.X = apply_scaler(s, d.X);
  return {std::move(out), std::move(s)};
}

int argmax3(const Vector3& p) {
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (p(i) > p(best)) best = i;
  }
  return best;
}

}  // namespace odt
