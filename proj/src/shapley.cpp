#include "odt/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "odt/csv.hpp"
#include "odt/rng.hpp"

namespace odt {

namespace {

constexpr std::uint64_t kShapStream = 0x73686170;
constexpr int kMaxExactFeatures = 16;

Vector3 value_of_mask(const Classifier& model, const RowVector& x, std::uint32_t mask,
                      const Matrix& background) {
  Vector3 acc = Vector3::Zero();
  RowVector mixed(background.cols());
  for (Eigen::Index b = 0; b < background.rows(); ++b) {
    mixed = background.row(b);
    for (int i = 0; i < x.size(); ++i)
      if (mask & (1u << i)) mixed(i) = x(i);
    acc += model.predict_proba(mixed);
  }
  return acc / static_cast<double>(background.rows());
}

void check_inputs(const Matrix& X, const Matrix& background) {
  if (background.rows() < 1) throw std::invalid_argument("shapley: background set is empty");
  if (X.cols() != background.cols())
    throw std::invalid_argument("shapley: instance and background widths differ");
  if (X.rows() < 1) throw std::invalid_argument("shapley: no instances to explain");
}

std::vector<FeatureMeta> resolve_meta(std::vector<FeatureMeta> meta, int m) {
  if (meta.empty()) {
    for (int i = 0; i < m; ++i)
      meta.push_back({"f" + std::to_string(i), FeatureKind::continuous});
  }
  if (static_cast<int>(meta.size()) != m)
    throw std::invalid_argument("shapley: feature meta does not match feature count");
  return meta;
}

double exact_factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

Vector3 coalition_value(const Classifier& model, const RowVector& x,
                        const std::vector<int>& coalition, const Matrix& background) {
  if (background.rows() < 1) throw std::invalid_argument("coalition_value: empty background");
  if (x.size() != background.cols())
    throw std::invalid_argument("coalition_value: instance and background widths differ");
  std::uint32_t mask = 0;
  for (int i : coalition) {
    if (i < 0 || i >= x.size()) throw std::out_of_range("coalition_value: feature index");
    mask |= 1u << i;
  }
  return value_of_mask(model, x, mask, background);
}

ShapMatrix shapley_exact(const Classifier& model, const Matrix& X, const Matrix& background,
                         std::vector<FeatureMeta> meta) {
  check_inputs(X, background);
  const int m = static_cast<int>(X.cols());
  if (m > kMaxExactFeatures)
    throw std::invalid_argument("shapley_exact: " + std::to_string(m) +
                                " features exceeds the 2^M enumeration limit of " +
                                std::to_string(kMaxExactFeatures) +
                                "; use shapley_sampled instead");

  ShapMatrix sm;
  sm.meta = resolve_meta(std::move(meta), m);
  sm.X = X;
  sm.background_size = static_cast<int>(background.rows());

  // |S|! (M-|S|-1)! / M! for |S| = 0..M-1; exact in double for M <= 16.
  const double m_fact = exact_factorial(m);
  std::vector<double> weight(static_cast<std::size_t>(m));
  for (int s = 0; s < m; ++s)
    weight[static_cast<std::size_t>(s)] = exact_factorial(s) * exact_factorial(m - s - 1) / m_fact;

  const std::uint32_t n_masks = 1u << m;
  std::vector<Vector3> v(n_masks);
  for (Eigen::Index n = 0; n < X.rows(); ++n) {
    const RowVector x = X.row(n);
    for (std::uint32_t mask = 0; mask < n_masks; ++mask)
      v[mask] = value_of_mask(model, x, mask, background);
    if (n == 0) sm.base_values = v[0];

    Matrix phi = Matrix::Zero(m, 3);
    for (int i = 0; i < m; ++i) {
      const std::uint32_t bit = 1u << i;
      for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
        if (mask & bit) continue;
        const double w = weight[static_cast<std::size_t>(std::popcount(mask))];
        phi.row(i) += w * (v[mask | bit] - v[mask]).transpose();
      }
    }
    sm.values.push_back(std::move(phi));
    sm.stderrs.push_back(Matrix::Zero(m, 3));
    sm.predicted.push_back(argmax3(v[n_masks - 1]));
  }
  return sm;
}

ShapMatrix shapley_sampled(const Classifier& model, const Matrix& X, const Matrix& background,
                           long n_permutations, std::uint64_t seed,
                           std::vector<FeatureMeta> meta) {
  check_inputs(X, background);
  if (n_permutations < 1) throw std::invalid_argument("shapley_sampled: n_permutations < 1");
  const int m = static_cast<int>(X.cols());
  if (m > 25) throw std::invalid_argument("shapley_sampled: feature count too large for bitmask");

  // Enumerate every permutation when that is no more work than sampling.
  double m_fact = 1.0;
  bool exhaustive = false;
  {
    double f = 1.0;
    for (int i = 2; i <= m; ++i) f *= i;
    m_fact = f;
    exhaustive = f <= static_cast<double>(n_permutations);
  }

  ShapMatrix sm;
  sm.meta = resolve_meta(std::move(meta), m);
  sm.X = X;
  sm.background_size = static_cast<int>(background.rows());

  for (Eigen::Index n = 0; n < X.rows(); ++n) {
    const RowVector x = X.row(n);
    std::unordered_map<std::uint32_t, Vector3> cache;
    auto value = [&](std::uint32_t mask) -> const Vector3& {
      auto it = cache.find(mask);
      if (it == cache.end())
        it = cache.emplace(mask, value_of_mask(model, x, mask, background)).first;
      return it->second;
    };
    const Vector3 base = value(0);
    const std::uint32_t full = (m >= 32) ? ~0u : ((1u << m) - 1u);
    const Vector3 full_value = value(full);
    if (n == 0) sm.base_values = base;

    Matrix sum = Matrix::Zero(m, 3);
    Matrix sum_sq = Matrix::Zero(m, 3);
    long n_draws = 0;

    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    auto walk = [&](const std::vector<int>& p) {
      std::uint32_t mask = 0;
      Vector3 prev = base;
      for (int i : p) {
        mask |= 1u << i;
        const Vector3& cur = value(mask);
        const Vector3 delta = cur - prev;
        sum.row(i) += delta.transpose();
        sum_sq.row(i) += delta.cwiseProduct(delta).transpose();
        prev = cur;
      }
      ++n_draws;
    };

    if (exhaustive) {
      do {
        walk(perm);
      } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
      Rng rng(derive_seed(seed, kShapStream, static_cast<std::uint64_t>(n)));
      for (long p = 0; p < n_permutations; ++p) {
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        walk(perm);
      }
    }

    Matrix phi = sum / static_cast<double>(n_draws);
    Matrix se = Matrix::Zero(m, 3);
    if (!exhaustive && n_draws > 1) {
      const double denom = static_cast<double>(n_draws) * static_cast<double>(n_draws - 1);
      se = ((sum_sq - phi.cwiseProduct(phi) * static_cast<double>(n_draws)) / denom)
               .cwiseMax(0.0)
               .cwiseSqrt();
    }
    sm.values.push_back(std::move(phi));
    sm.stderrs.push_back(std::move(se));
    sm.predicted.push_back(argmax3(full_value));
  }
  return sm;
}

std::vector<std::pair<int, double>> importance(const ShapMatrix& sm) {
  if (sm.values.empty()) throw std::invalid_argument("importance: empty ShapMatrix");
  const int m = sm.n_features();
  std::vector<std::pair<int, double>> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (const Matrix& v : sm.values) acc += v.row(i).cwiseAbs().sum();
    out.emplace_back(i, acc / (3.0 * static_cast<double>(sm.values.size())));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

void export_summary(const ShapMatrix& sm, std::ostream& os) {
  os << "instance,feature,shap_value,feature_value\n";
  for (int n = 0; n < sm.n_instances(); ++n) {
    const int cls = sm.predicted[static_cast<std::size_t>(n)];
    for (int i = 0; i < sm.n_features(); ++i) {
      os << n << ',' << csv_escape(sm.meta[static_cast<std::size_t>(i)].name) << ','
         << format_double(sm.values[static_cast<std::size_t>(n)](i, cls)) << ','
         << format_double(sm.X(n, i)) << '\n';
    }
  }
}

namespace {

int feature_index_of(const ShapMatrix& sm, const std::string& feature) {
  for (int i = 0; i < static_cast<int>(sm.meta.size()); ++i)
    if (sm.meta[static_cast<std::size_t>(i)].name == feature) return i;
  throw std::invalid_argument("unknown feature: " + feature);
}

}  // namespace

void export_dependency(const ShapMatrix& sm, const std::string& feature, std::ostream& os) {
  const int f = feature_index_of(sm, feature);
  os << "feature_value,shap_value,class\n";
  for (int n = 0; n < sm.n_instances(); ++n)
    for (int c = 0; c < 3; ++c)
      os << format_double(sm.X(n, f)) << ','
         << format_double(sm.values[static_cast<std::size_t>(n)](f, c)) << ',' << c << '\n';
}

void export_summary_file(const ShapMatrix& sm, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  export_summary(sm, os);
  if (!os) throw std::runtime_error("write failed: " + path);
}

void export_dependency_file(const ShapMatrix& sm, const std::string& feature,
                            const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  export_dependency(sm, feature, os);
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace odt
