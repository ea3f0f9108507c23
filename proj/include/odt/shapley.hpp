#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "odt/core.hpp"

namespace odt {

/// Interventional Shapley attributions for a batch of instances.
///
/// values[n] is an M x 3 matrix: attribution of feature i toward class c for
/// instance n.  base_values is the mean predict_proba over the background set,
/// so values[n].col(c).sum() + base_values[c] == predict_proba(row n)[c].
struct ShapMatrix {
  std::vector<Matrix> values;
  std::vector<Matrix> stderrs;  // same shape; zero matrices when exact
  Vector3 base_values = Vector3::Zero();
  int background_size = 0;
  std::vector<FeatureMeta> meta;
  Matrix X;                    // the explained instances, one row each
  std::vector<int> predicted;  // argmax class per instance

  int n_instances() const { return static_cast<int>(values.size()); }
  int n_features() const { return values.empty() ? 0 : static_cast<int>(values[0].rows()); }
};

/// v(S): mean prediction over the background with features in `coalition`
/// taken from `x` and the rest from each background row in turn.
Vector3 coalition_value(const Classifier& model, const RowVector& x,
                        const std::vector<int>& coalition, const Matrix& background);

/// Exact Shapley values by enumerating all 2^M coalitions (M <= 16).
ShapMatrix shapley_exact(const Classifier& model, const Matrix& X, const Matrix& background,
                         std::vector<FeatureMeta> meta = {});

/// Permutation-sampling estimator with per-value standard errors.  When M! <=
/// n_permutations every permutation is enumerated once and the result is exact
/// (standard errors all zero).
ShapMatrix shapley_sampled(const Classifier& model, const Matrix& X, const Matrix& background,
                           long n_permutations, std::uint64_t seed,
                           std::vector<FeatureMeta> meta = {});

/// Mean |attribution| over instances and classes, sorted descending; ties
/// break toward the lower feature index.
std::vector<std::pair<int, double>> importance(const ShapMatrix& sm);

/// One row per (instance, feature); the shap value is the attribution toward
/// that instance's predicted class.
void export_summary(const ShapMatrix& sm, std::ostream& os);
void export_summary_file(const ShapMatrix& sm, const std::string& path);

/// One row per (instance, class) for the named feature.
void export_dependency(const ShapMatrix& sm, const std::string& feature, std::ostream& os);
void export_dependency_file(const ShapMatrix& sm, const std::string& feature,
                            const std::string& path);

}  // namespace odt
