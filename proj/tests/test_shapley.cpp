#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "odt/forest.hpp"
#include "odt/knn.hpp"
#include "odt/rng.hpp"
#include "odt/shapley.hpp"
#include "odt/tree.hpp"
#include "testutil.hpp"

using namespace odt;
using odt::testutil::make_blobs;

namespace {

// Affine scores: predict_proba(x) = W x + c. For a linear model, the exact
// interventional Shapley value has the closed form
//   phi_i(class) = W(class, i) * (x_i - mean(background col i)),
// which pins the enumerator down to analytic precision.
class LinearModel : public Classifier {
 public:
  LinearModel(Eigen::Matrix<double, 3, Eigen::Dynamic> W, Vector3 c)
      : W_(std::move(W)), c_(std::move(c)) {}
  void fit(const LabeledDataset&, std::uint64_t) override {}
  Vector3 predict_proba(const RowVector& x) const override { return W_ * x.transpose() + c_; }

 private:
  Eigen::Matrix<double, 3, Eigen::Dynamic> W_;
  Vector3 c_;
};

}  // namespace

TEST_CASE("exact shapley matches the linear closed form") {
  const int m = 5;
  Rng rng(7);
  Eigen::Matrix<double, 3, Eigen::Dynamic> W(3, m);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < m; ++i) W(c, i) = rng.normal(0.0, 0.1);
  const LinearModel model(W, Vector3::Constant(1.0 / 3));

  Matrix background(20, m);
  for (Eigen::Index i = 0; i < background.rows(); ++i)
    for (int j = 0; j < m; ++j) background(i, j) = rng.uniform() * 4.0 - 2.0;
  Matrix X(3, m);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (int j = 0; j < m; ++j) X(i, j) = rng.uniform() * 4.0 - 2.0;

  const ShapMatrix sm = shapley_exact(model, X, background);
  const RowVector mean_bg = background.colwise().mean();
  for (int n = 0; n < sm.n_instances(); ++n)
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < 3; ++c) {
        const double expect = W(c, i) * (X(n, i) - mean_bg(i));
        CHECK(sm.values[static_cast<std::size_t>(n)](i, c) ==
              doctest::Approx(expect).epsilon(1e-10));
      }

  // Base value = model at the background mean (linearity).
  const Vector3 base = W * mean_bg.transpose() + Vector3::Constant(1.0 / 3);
  CHECK((sm.base_values - base).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(sm.background_size == 20);
  // Default meta falls back to positional names.
  CHECK(sm.meta.size() == 5);
  CHECK(sm.meta[0].name == "f0");
}

TEST_CASE("coalition_value endpoints") {
  const LabeledDataset d = make_blobs(10, 3, 4);
  RandomForest f({5, TreeConfig{}, 0});
  f.fit(d, 1);
  const Matrix background = d.X.topRows(12);
  const RowVector x = d.X.row(20);

  // Empty coalition: mean model output over the background rows.
  Vector3 mean = Vector3::Zero();
  for (Eigen::Index i = 0; i < background.rows(); ++i)
    mean += f.predict_proba(background.row(i));
  mean /= static_cast<double>(background.rows());
  CHECK((coalition_value(f, x, {}, background) - mean).cwiseAbs().maxCoeff() < 1e-12);

  // Full coalition: the model's own prediction at x, exactly.
  const Vector3 full = coalition_value(f, x, {0, 1, 2, 3}, background);
  CHECK(full == f.predict_proba(x));

  CHECK_THROWS_WITH_AS(coalition_value(f, x, {}, Matrix(0, 4)), doctest::Contains("empty"),
                       std::invalid_argument);
  CHECK_THROWS_AS(coalition_value(f, x, {9}, background), std::out_of_range);
  CHECK_THROWS_WITH_AS(coalition_value(f, x, {}, Matrix(3, 2)), doctest::Contains("widths"),
                       std::invalid_argument);
}

TEST_CASE("efficiency: attributions sum to the prediction") {
  const LabeledDataset d = make_blobs(12, 19, 6);
  ForestConfig fc;
  fc.n_estimators = 12;
  fc.tree.max_features = MaxFeatures::sqrt();
  RandomForest f(fc);
  f.fit(d, 2);
  const Matrix background = d.X.topRows(25);
  const Matrix X = d.X.bottomRows(5);
  const ShapMatrix sm = shapley_exact(f, X, background, d.meta);
  for (int n = 0; n < sm.n_instances(); ++n) {
    const Vector3 total = sm.values[static_cast<std::size_t>(n)].colwise().sum().transpose() +
                          sm.base_values;
    const Vector3 pred = f.predict_proba(X.row(n));
    CHECK((total - pred).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(sm.predicted[static_cast<std::size_t>(n)] == argmax3(pred));
  }
}

TEST_CASE("a feature no tree splits on gets exactly zero attribution") {
  // make_blobs keeps its last column constant, so no split can use it.
  const LabeledDataset d = make_blobs(12, 47, 5);
  DecisionTree t;
  t.fit(d, 0);
  REQUIRE(!t.uses_feature(4));
  ForestConfig fc;
  fc.n_estimators = 10;
  RandomForest f(fc);
  f.fit(d, 0);

  const Matrix background = d.X.topRows(20);
  Matrix X = d.X.bottomRows(4);
  X(0, 4) = 99.0;  // even an off-distribution value changes nothing
  for (const Classifier* model : {static_cast<const Classifier*>(&t),
                                  static_cast<const Classifier*>(&f)}) {
    const ShapMatrix sm = shapley_exact(*model, X, background, d.meta);
    for (int n = 0; n < sm.n_instances(); ++n)
      for (int c = 0; c < 3; ++c)
        CHECK(sm.values[static_cast<std::size_t>(n)](4, c) == 0.0);  // exact zero
  }
}

TEST_CASE("symmetric features earn equal attributions") {
  // Columns 0 and 1 are byte-identical across train, background, and probe, so
  // both play interchangeable roles in any coalition.
  LabeledDataset d = make_blobs(10, 61, 4);
  d.X.col(1) = d.X.col(0);
  KnnClassifier knn(3);
  knn.fit(d, 0);
  const Matrix background = d.X.topRows(15);
  RowVector x = d.X.row(25);
  x(1) = x(0);
  Matrix X(1, 4);
  X.row(0) = x;
  const ShapMatrix sm = shapley_exact(knn, X, background, d.meta);
  for (int c = 0; c < 3; ++c)
    CHECK(sm.values[0](0, c) == doctest::Approx(sm.values[0](1, c)).epsilon(1e-12));
}

TEST_CASE("sampled estimator: exhaustive small cases equal exact enumeration") {
  const LabeledDataset d = make_blobs(10, 83, 4);
  ForestConfig fc;
  fc.n_estimators = 8;
  fc.tree.max_features = MaxFeatures::sqrt();
  RandomForest f(fc);
  f.fit(d, 3);
  const Matrix background = d.X.topRows(10);
  const Matrix X = d.X.bottomRows(3);

  // 4! = 24 <= 24 permutations: the sampler enumerates and is exact.
  const ShapMatrix exact = shapley_exact(f, X, background, d.meta);
  const ShapMatrix sampled = shapley_sampled(f, X, background, 24, 5, d.meta);
  for (int n = 0; n < exact.n_instances(); ++n) {
    CHECK((exact.values[static_cast<std::size_t>(n)] - sampled.values[static_cast<std::size_t>(n)])
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK(sampled.stderrs[static_cast<std::size_t>(n)].cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((exact.base_values - sampled.base_values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sampled estimator converges with honest standard errors") {
  const LabeledDataset d = make_blobs(10, 101, 6);
  ForestConfig fc;
  fc.n_estimators = 8;
  // Subsampled splits force the trees onto different features; with every
  // feature equally informative the default all-features policy would let each
  // tree pick feature 0 and the coalition game would collapse to one player.
  fc.tree.max_features = MaxFeatures::sqrt();
  RandomForest f(fc);
  f.fit(d, 4);
  const Matrix background = d.X.topRows(10);
  Matrix X = d.X.bottomRows(2);
  Rng jitter(55);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) += jitter.uniform() * 6.0 - 3.0;

  const ShapMatrix exact = shapley_exact(f, X, background, d.meta);
  const ShapMatrix s1 = shapley_sampled(f, X, background, 200, 9, d.meta);
  const ShapMatrix s2 = shapley_sampled(f, X, background, 200, 9, d.meta);
  const ShapMatrix s3 = shapley_sampled(f, X, background, 200, 10, d.meta);

  bool any_stderr = false, seeds_differ = false;
  for (int n = 0; n < exact.n_instances(); ++n) {
    const auto ns = static_cast<std::size_t>(n);
    CHECK(s1.values[ns] == s2.values[ns]);  // same seed, identical estimate
    seeds_differ |= (s1.values[ns] - s3.values[ns]).cwiseAbs().maxCoeff() > 0.0;
    for (int i = 0; i < exact.n_features(); ++i)
      for (int c = 0; c < 3; ++c) {
        const double err = std::abs(s1.values[ns](i, c) - exact.values[ns](i, c));
        const double se = s1.stderrs[ns](i, c);
        CHECK(se >= 0.0);
        any_stderr |= se > 0.0;
        CHECK(err <= 5.0 * se + 1e-9);  // inside a generous confidence band
      }
  }
  CHECK(any_stderr);
  CHECK(seeds_differ);
}

TEST_CASE("importance ranks by mean absolute attribution") {
  ShapMatrix sm;
  sm.meta = {{"a", FeatureKind::continuous},
             {"b", FeatureKind::continuous},
             {"c", FeatureKind::continuous}};
  Matrix v1(3, 3), v2(3, 3);
  // Feature 0: |sum| = 6 over both instances; feature 1: 12; feature 2: 6.
  v1 << 1, -1, 1, 2, -2, 2, -1, 1, -1;
  v2 << -1, 1, -1, 2, -2, 2, 1, -1, 1;
  sm.values = {v1, v2};
  const auto ranks = importance(sm);
  REQUIRE(ranks.size() == 3);
  CHECK(ranks[0].first == 1);
  CHECK(ranks[0].second == doctest::Approx(2.0).epsilon(1e-12));  // 12 / (3 * 2)
  // Features 0 and 2 tie at 1.0; the lower index comes first.
  CHECK(ranks[1].first == 0);
  CHECK(ranks[2].first == 2);
  CHECK(ranks[1].second == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(importance(ShapMatrix{}), doctest::Contains("empty"),
                       std::invalid_argument);
}

TEST_CASE("summary and dependency exports") {
  ShapMatrix sm;
  sm.meta = {{"size", FeatureKind::continuous}, {"flag", FeatureKind::binary}};
  Matrix v1(2, 3), v2(2, 3);
  v1 << 0.5, 0.25, -0.75, 0.125, -0.125, 0.0;
  v2 << -0.5, 0.5, 0.0, 0.25, -0.5, 0.25;
  sm.values = {v1, v2};
  sm.stderrs = {Matrix::Zero(2, 3), Matrix::Zero(2, 3)};
  sm.X = Matrix(2, 2);
  sm.X << 3.5, 1.0, 2.0, 0.0;
  sm.predicted = {2, 1};

  std::ostringstream sum;
  export_summary(sm, sum);
  std::istringstream lines(sum.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "instance,feature,shap_value,feature_value");
  std::getline(lines, line);
  CHECK(line == "0,size,-0.75,3.5");  // class 2 attribution for instance 0
  std::getline(lines, line);
  CHECK(line == "0,flag,0,1");
  std::getline(lines, line);
  CHECK(line == "1,size,0.5,2");  // class 1 attribution for instance 1
  std::getline(lines, line);
  CHECK(line == "1,flag,-0.5,0");
  CHECK(!std::getline(lines, line));  // header + one row per (instance, feature)

  std::ostringstream dep;
  export_dependency(sm, "flag", dep);
  std::istringstream dlines(dep.str());
  std::getline(dlines, line);
  CHECK(line == "feature_value,shap_value,class");
  int rows = 0;
  std::set<std::string> values;
  while (std::getline(dlines, line)) {
    rows++;
    values.insert(line.substr(0, line.find(',')));
  }
  CHECK(rows == 6);  // 2 instances x 3 classes
  CHECK(values == std::set<std::string>{"1", "0"});

  std::ostringstream again;
  export_summary(sm, again);
  CHECK(again.str() == sum.str());  // byte-stable re-export

  CHECK_THROWS_WITH_AS(export_dependency(sm, "ghost", dep), doctest::Contains("ghost"),
                       std::invalid_argument);
}

TEST_CASE("guards on widths, sizes, and the enumeration limit") {
  const LabeledDataset d = make_blobs(8, 5, 4);
  KnnClassifier knn(3);
  knn.fit(d, 0);
  const Matrix background = d.X.topRows(8);

  Matrix wide(1, 17);
  wide.setZero();
  Matrix wide_bg(2, 17);
  wide_bg.setZero();
  CHECK_THROWS_WITH_AS(shapley_exact(knn, wide, wide_bg), doctest::Contains("shapley_sampled"),
                       std::invalid_argument);

  CHECK_THROWS_WITH_AS(shapley_exact(knn, Matrix(0, 4), background), doctest::Contains("no instances"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(shapley_exact(knn, d.X.topRows(1), Matrix(0, 4)), doctest::Contains("empty"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(shapley_exact(knn, d.X.topRows(1), Matrix(2, 3)), doctest::Contains("widths"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(shapley_sampled(knn, d.X.topRows(1), background, 0, 1),
                       doctest::Contains("n_permutations"), std::invalid_argument);
  std::vector<FeatureMeta> short_meta = {{"only", FeatureKind::continuous}};
  CHECK_THROWS_WITH_AS(shapley_exact(knn, d.X.topRows(1), background, short_meta),
                       doctest::Contains("meta"), std::invalid_argument);
}

TEST_CASE("background row order does not change exact values") {
  const LabeledDataset d = make_blobs(10, 121, 4);
  ForestConfig fc;
  fc.n_estimators = 6;
  RandomForest f(fc);
  f.fit(d, 1);
  Matrix bg = d.X.topRows(12);
  Matrix reversed(bg.rows(), bg.cols());
  for (Eigen::Index i = 0; i < bg.rows(); ++i) reversed.row(i) = bg.row(bg.rows() - 1 - i);
  const Matrix X = d.X.bottomRows(2);
  const ShapMatrix a = shapley_exact(f, X, bg, d.meta);
  const ShapMatrix b = shapley_exact(f, X, reversed, d.meta);
  for (int n = 0; n < a.n_instances(); ++n)
    CHECK((a.values[static_cast<std::size_t>(n)] - b.values[static_cast<std::size_t>(n)])
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}
