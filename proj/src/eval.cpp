#include "odt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "odt/rng.hpp"

namespace odt {

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("confusion: length mismatch");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    int a = y_true[i], p = y_pred[i];
    if (a < 0 || a > 2 || p < 0 || p > 2) throw std::invalid_argument("confusion: label outside {0,1,2}");
    cm.counts(a, p) += 1;
  }
  return cm;
}

ClassAccuracy per_class_accuracy(const ConfusionMatrix& cm) {
  ClassAccuracy out;
  for (int c = 0; c < 3; ++c) {
    int n = cm.row_sum(c);
    if (n == 0) {
      out.exact[c] = std::numeric_limits<double>::quiet_NaN();
      out.rounded[c] = 0;
      out.defined[c] = false;
      continue;
    }
    out.exact[c] = 100.0 * cm.counts(c, c) / n;
    out.rounded[c] = static_cast<int>(std::lround(out.exact[c]));
    out.defined[c] = true;
  }
  return out;
}

OverallAccuracy overall_accuracy(const ConfusionMatrix& cm) {
  OverallAccuracy out;
  int n = cm.total();
  if (n == 0) throw std::invalid_argument("overall_accuracy: empty matrix");
  out.exact = 100.0 * cm.trace() / n;
  out.rounded = static_cast<int>(std::lround(out.exact));
  return out;
}

ConfusionMatrix table2_fixture() {
  ConfusionMatrix cm;
  cm.counts << 166, 54, 6, 78, 114, 24, 1, 29, 55;
  return cm;
}

ConfusionMatrix table3_fixture() {
  ConfusionMatrix cm;
  cm.counts << 107, 3, 3, 32, 109, 27, 14, 44, 98;
  return cm;
}

LabeledDataset take_rows(const LabeledDataset& d, const std::vector<int>& rows) {
  LabeledDataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), d.X.cols());
  out.y.resize(rows.size());
  out.meta = d.meta;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = d.X.row(rows[i]);
    out.y[i] = d.y[rows[i]];
  }
  return out;
}

namespace {

std::array<std::vector<int>, 3> rows_by_class(const std::vector<int>& y) {
  std::array<std::vector<int>, 3> by;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] > 2) throw std::invalid_argument("labels outside {0,1,2}");
    by[static_cast<std::size_t>(y[i])].push_back(static_cast<int>(i));
  }
  return by;
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& d, double test_fraction,
                                                           std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("stratified_split: test_fraction must lie in (0,1)");
  const int n = static_cast<int>(d.rows());
  auto by = rows_by_class(d.y);
  for (int c = 0; c < 3; ++c) {
    if (!by[c].empty() && by[c].size() < 2)
      throw std::invalid_argument("stratified_split: class " + std::to_string(c) + " has fewer than 2 rows");
  }

  // Largest-remainder apportionment of the total test count across classes.
  int test_total = static_cast<int>(std::lround(test_fraction * n));
  test_total = std::clamp(test_total, 1, n - 1);
  std::array<int, 3> quota{};
  std::array<double, 3> rem{};
  int assigned = 0;
  for (int c = 0; c < 3; ++c) {
    if (by[c].empty()) continue;
    double exact = test_fraction * static_cast<double>(by[c].size());
    quota[c] = static_cast<int>(std::floor(exact));
    rem[c] = exact - quota[c];
    assigned += quota[c];
  }
  std::vector<int> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (rem[a] != rem[b]) return rem[a] > rem[b];
    return a < b;
  });
  for (int i = 0; assigned < test_total; i = (i + 1) % 3) {
    int c = order[static_cast<std::size_t>(i)];
    if (by[c].empty() || quota[c] >= static_cast<int>(by[c].size()) - 1) continue;
    ++quota[c];
    ++assigned;
  }
  // Keep at least one row of every present class on each side.
  for (int c = 0; c < 3; ++c) {
    if (by[c].empty()) continue;
    quota[c] = std::clamp(quota[c], 1, static_cast<int>(by[c].size()) - 1);
  }

  Rng rng(derive_seed(seed, 0x73706c6974ULL, 0));  // "split"
  std::vector<int> test_rows, train_rows;
  for (int c = 0; c < 3; ++c) {
    if (by[c].empty()) continue;
    auto rows = by[c];
    rng.shuffle(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      (static_cast<int>(i) < quota[c] ? test_rows : train_rows).push_back(rows[i]);
    }
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {take_rows(d, train_rows), take_rows(d, test_rows)};
}

std::vector<int> stratified_fold_assignment(const std::vector<int>& y, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_fold_assignment: k must be >= 2");
  auto by = rows_by_class(y);
  for (int c = 0; c < 3; ++c) {
    if (!by[c].empty() && static_cast<int>(by[c].size()) < k)
      throw std::invalid_argument("stratified_fold_assignment: class " + std::to_string(c) +
                                  " has fewer rows than folds (" + std::to_string(by[c].size()) + " < " +
                                  std::to_string(k) + ")");
  }
  Rng rng(derive_seed(seed, 0x666f6c6473ULL, 0));  // "folds"
  std::vector<int> fold(y.size(), -1);
  for (int c = 0; c < 3; ++c) {
    auto rows = by[c];
    rng.shuffle(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) fold[static_cast<std::size_t>(rows[i])] = static_cast<int>(i % k);
  }
  return fold;
}

ModelComparison compare_models(const LabeledDataset& d,
                               const std::vector<std::pair<std::string, ClassifierBuilder>>& families,
                               double test_fraction, std::uint64_t seed) {
  auto [train, test] = stratified_split(d, test_fraction, seed);
  ModelComparison out;
  double best = -1.0;
  for (const auto& [name, build] : families) {
    FamilyRun run;
    run.family = name;
    try {
      auto model = build();
      model->fit(train, derive_seed(seed, 0x666974ULL, static_cast<std::uint64_t>(out.runs.size())));
      std::vector<int> pred(test.rows());
      for (Eigen::Index i = 0; i < test.X.rows(); ++i) pred[static_cast<std::size_t>(i)] = model->predict(test.X.row(i));
      run.cm = confusion(test.y, pred);
      run.per_class = per_class_accuracy(run.cm);
      run.overall = overall_accuracy(run.cm);
      run.ok = true;
      if (run.overall.exact > best || (run.overall.exact == best && name < out.best_family)) {
        best = run.overall.exact;
        out.best_family = name;
      }
    } catch (const std::exception& e) {
      run.error = e.what();
    }
    out.runs.push_back(std::move(run));
  }
  return out;
}

}  // namespace odt
