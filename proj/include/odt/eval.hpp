#pragma once
#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "odt/core.hpp"

namespace odt {

// 3x3 confusion matrix; rows = actual {low, medium, high}, columns = predicted.
struct ConfusionMatrix {
  Eigen::Matrix3i counts = Eigen::Matrix3i::Zero();

  int total() const { return counts.sum(); }
  int row_sum(int r) const { return counts.row(r).sum(); }
  int trace() const { return counts.trace(); }
};

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct ClassAccuracy {
  std::array<double, 3> exact{};   // percent; NaN when the class is absent
  std::array<int, 3> rounded{};    // nearest integer, matching the reported tables
  std::array<bool, 3> defined{};   // false for an empty actual-class row
};

ClassAccuracy per_class_accuracy(const ConfusionMatrix& cm);

struct OverallAccuracy {
  double exact = 0;  // percent
  int rounded = 0;
};

OverallAccuracy overall_accuracy(const ConfusionMatrix& cm);

ConfusionMatrix table2_fixture();  // trip production testing matrix
ConfusionMatrix table3_fixture();  // trip distribution testing matrix

/// Stratified train/test split; |test| = round(test_fraction * n) apportioned by
/// largest remainder across classes. Throws when a class has < 2 rows.
std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& d, double test_fraction,
                                                           std::uint64_t seed);

/// Stratified fold index per row; per-class fold sizes differ by at most 1.
/// Throws naming the class when any class has fewer than k members.
std::vector<int> stratified_fold_assignment(const std::vector<int>& y, int k, std::uint64_t seed);

LabeledDataset take_rows(const LabeledDataset& d, const std::vector<int>& rows);

struct FamilyRun {
  std::string family;
  bool ok = false;
  std::string error;
  ConfusionMatrix cm;
  ClassAccuracy per_class;
  OverallAccuracy overall;
};

struct ModelComparison {
  std::vector<FamilyRun> runs;
  std::string best_family;  // highest overall accuracy; ties by name
};

using ClassifierBuilder = std::function<std::unique_ptr<Classifier>()>;

/// Shared stratified split, then each family fit on train / scored on test.
ModelComparison compare_models(const LabeledDataset& d,
                               const std::vector<std::pair<std::string, ClassifierBuilder>>& families,
                               double test_fraction, std::uint64_t seed);

}  // namespace odt
