#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "odt/calendar.hpp"

namespace odt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Vector3 = Eigen::Vector3d;

enum class FeatureKind { continuous, discrete, binary };
std::string to_string(FeatureKind k);
FeatureKind feature_kind_from_string(const std::string& s);

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
};

struct TripRecord {
  std::string origin_da;
  std::string dest_da;
  Date date;
  int riders = 1;  // counted as one trip regardless
};

struct ZoneProfile {
  std::string da_id;
  double population_density = 0;
  double median_income = 0;
  double avg_household_size = 0;
  double pct_male = 0;
  double pct_working_age = 0;
};

// Insertion-ordered registry of zones with id lookup; duplicate ids are
// last-wins (the caller records the warning).
class ZoneRegistry {
 public:
  /// Returns true when an existing profile was replaced.
  bool upsert(const ZoneProfile& p);
  const ZoneProfile* find(const std::string& da_id) const;
  const std::vector<ZoneProfile>& zones() const { return zones_; }
  int size() const { return static_cast<int>(zones_.size()); }

 private:
  std::vector<ZoneProfile> zones_;
  std::map<std::string, int> index_;
};

struct LabeledDataset {
  Matrix X;                       // one row per observation, 8 or 13 columns
  std::vector<int> y;             // demand level per row: 0 low, 1 medium, 2 high
  std::vector<FeatureMeta> meta;  // per-column metadata, order is contractual

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
};

/// Violation report; empty iff the dataset is valid.
std::vector<std::string> validate_dataset(const LabeledDataset& d);

/// Like validate_dataset but without the 8/13-column contract, for internal
/// training sets of any width (ensemble column subsets, test fixtures).
std::vector<std::string> training_violations(const LabeledDataset& d);

enum class ScalingKind { raw, minmax };
std::string to_string(ScalingKind k);
ScalingKind scaling_kind_from_string(const std::string& s);

struct ScalerState {
  ScalingKind kind = ScalingKind::raw;
  Vector lo, hi;                      // training-set bounds per column
  std::vector<std::uint8_t> scaled;   // 1 where min-max applies (continuous cols)
  std::vector<std::string> warnings;  // e.g. constant continuous column

  bool operator==(const ScalerState& o) const {
    return kind == o.kind && lo == o.lo && hi == o.hi && scaled == o.scaled;
  }
};

ScalerState fit_scaler(const LabeledDataset& d, ScalingKind kind);
Matrix apply_scaler(const ScalerState& s, const Matrix& X);  // clamps to [0,1]
RowVector apply_scaler(const ScalerState& s, const RowVector& x);
Matrix invert_scaler(const ScalerState& s, const Matrix& X);

/// scale_features: fit on d and return the transformed copy plus the state.
std::pair<LabeledDataset, ScalerState> scale_features(const LabeledDataset& d, ScalingKind kind);

int argmax3(const Vector3& p);  // lowest index wins ties

// Behavioural contract every model family implements. Determinism: identical
// (data, hyperparameters, seed) must reproduce identical predictions.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const LabeledDataset& d, std::uint64_t seed) = 0;
  virtual Vector3 predict_proba(const RowVector& x) const = 0;
  virtual int predict(const RowVector& x) const { return argmax3(predict_proba(x)); }
};

}  // namespace odt
