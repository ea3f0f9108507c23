#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "odt/cluster.hpp"
#include "odt/rng.hpp"

using namespace odt;

namespace {

// Exhaustive 1-D k-means oracle. Optimal 1-D clusters are contiguous in
// sorted order, so enumerating split positions covers every candidate
// partition; this is an independent check on the iterative solver.
double exhaustive_min_distortion(std::vector<double> pts, int k) {
  std::sort(pts.begin(), pts.end());
  const int n = static_cast<int>(pts.size());
  auto sse = [&](int lo, int hi) {  // [lo, hi)
    double mean = 0;
    for (int i = lo; i < hi; ++i) mean += pts[static_cast<std::size_t>(i)];
    mean /= (hi - lo);
    double s = 0;
    for (int i = lo; i < hi; ++i) {
      const double d = pts[static_cast<std::size_t>(i)] - mean;
      s += d * d;
    }
    return s;
  };
  double best = std::numeric_limits<double>::infinity();
  if (k == 2) {
    for (int a = 1; a < n; ++a) best = std::min(best, sse(0, a) + sse(a, n));
  } else {
    for (int a = 1; a < n - 1; ++a)
      for (int b = a + 1; b < n; ++b)
        best = std::min(best, sse(0, a) + sse(a, b) + sse(b, n));
  }
  return best;
}

Matrix column(const std::vector<double>& v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, 0) = v[static_cast<std::size_t>(i)];
  return m;
}

}  // namespace

TEST_CASE("kmeans trivial and error cases") {
  const Matrix pts = column({1.0, 5.0, 9.0});
  const Vector w = Vector::Ones(3);
  const KMeansResult r = kmeans(pts, 3, 0);
  CHECK(r.distortion == doctest::Approx(0.0));
  CHECK(r.centroids(0, 0) < r.centroids(1, 0));
  CHECK(r.centroids(1, 0) < r.centroids(2, 0));
  CHECK_THROWS(kmeans(pts, 4, 0));  // more clusters than distinct points

  const KMeansResult one = kmeans(pts, 1, 0);
  CHECK(one.centroids(0, 0) == doctest::Approx(5.0));
  CHECK(one.distortion == doctest::Approx(32.0));  // 16 + 0 + 16
}

TEST_CASE("weighted kmeans equals replicated points") {
  const Matrix pts = column({1.0, 2.0, 8.0, 9.0});
  Vector w(4);
  w << 3, 1, 2, 2;
  std::vector<double> replicated{1, 1, 1, 2, 8, 8, 9, 9};
  const KMeansResult weighted = kmeans_weighted(pts, w, 2, 7);
  const KMeansResult plain = kmeans(column(replicated), 2, 7);
  CHECK(weighted.distortion == doctest::Approx(plain.distortion).epsilon(1e-12));
  CHECK(weighted.centroids(0, 0) == doctest::Approx(plain.centroids(0, 0)));
  CHECK(weighted.centroids(1, 0) == doctest::Approx(plain.centroids(1, 0)));
}

TEST_CASE("kmeans determinism per seed") {
  Rng gen(123);
  std::vector<double> pts;
  for (int i = 0; i < 40; ++i) pts.push_back(gen.uniform(0, 10));
  const KMeansResult a = kmeans(column(pts), 3, 99);
  const KMeansResult b = kmeans(column(pts), 3, 99);
  CHECK(a.distortion == b.distortion);
  CHECK(a.assignment == b.assignment);
}

TEST_CASE("restarted kmeans matches the exhaustive 1-D oracle") {
  Rng gen(2024);
  int hits = 0;
  const int trials = 60;
  for (int t = 0; t < trials; ++t) {
    const int n = 3 + static_cast<int>(gen.uniform_int(0, 9));  // 3..12 points
    const int k = 2 + static_cast<int>(gen.uniform_int(0, 1));
    std::vector<double> pts;
    for (int i = 0; i < n; ++i) pts.push_back(gen.uniform(0, 10));
    const double oracle = exhaustive_min_distortion(pts, k);
    KMeansParams p;
    p.restarts = 10;
    const double got = kmeans(column(pts), k, static_cast<std::uint64_t>(t), p).distortion;
    CHECK(got >= oracle - 1e-9);  // never better than the true optimum
    if (std::abs(got - oracle) <= 1e-9) ++hits;
  }
  CHECK(hits >= trials - 1);
}

TEST_CASE("elbow_select finds the knee of a distortion curve") {
  // Sharp knee at k=2.
  CHECK(elbow_select({100.0, 10.0, 9.5, 9.0, 8.8}) == 2);
  // Gradual then collapse: knee at k=3.
  CHECK(elbow_select({100.0, 60.0, 8.0, 6.0, 5.0, 4.5}) == 3);

  bool flat = false;
  CHECK(elbow_select({5.0, 5.0, 5.0}, &flat) == 1);
  CHECK(flat);

  // Independent recomputation of the normalized chord distances.
  const std::vector<double> curve{100.0, 40.0, 12.0, 10.0, 9.0};
  const int k_max = static_cast<int>(curve.size());
  int best_k = 2;
  double best_d = -1;
  for (int k = 2; k <= k_max - 1; ++k) {
    const double x = static_cast<double>(k - 1) / (k_max - 1);
    const double y = (curve[static_cast<std::size_t>(k - 1)] - curve.back()) /
                     (curve.front() - curve.back());
    const double d = std::abs(x + y - 1.0) / std::sqrt(2.0);
    if (d > best_d) {
      best_d = d;
      best_k = k;
    }
  }
  CHECK(elbow_select(curve) == best_k);
}

TEST_CASE("elbow on three separated 1-D blobs picks k=3") {
  Rng gen(5);
  std::vector<double> pts;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 30; ++i) pts.push_back(20.0 * c + gen.normal(0.0, 0.5));
  const ElbowResult er = elbow(column(pts), Vector::Ones(90), 8, 1);
  CHECK(er.k == 3);
  CHECK_FALSE(er.flat_warning);
  REQUIRE(er.distortions.size() == 8);
  for (std::size_t i = 1; i < er.distortions.size(); ++i)
    CHECK(er.distortions[i] <= er.distortions[i - 1] + 1e-9);
}

TEST_CASE("fit_labeler thresholds at lower-cluster maxima") {
  const std::vector<int> counts{1, 1, 1, 4, 4, 4, 9, 9, 9};
  const DemandLabeler lb = fit_labeler(counts, 3, 0);
  REQUIRE(lb.boundaries.size() == 2);
  CHECK(lb.boundaries[0] == 1);
  CHECK(lb.boundaries[1] == 4);
  REQUIRE(lb.centroids.size() == 3);
  CHECK(lb.centroids[0] == doctest::Approx(1.0));
  CHECK(lb.centroids[2] == doctest::Approx(9.0));

  CHECK(label(lb, 1) == 0);
  CHECK(label(lb, 2) == 1);
  CHECK(label(lb, 4) == 1);
  CHECK(label(lb, 5) == 2);
  CHECK(label(lb, 100) == 2);
  CHECK_THROWS(label(lb, 0));

  const DemandLabeler single = fit_labeler(counts, 1, 0);
  CHECK(single.boundaries.empty());
  CHECK(label(single, 7) == 0);
}

TEST_CASE("labeler on skewed counts reproduces the production boundaries") {
  // Bulk of zone-days at 1 trip, a medium band, and a high tail: the paper's
  // low <= 1 < medium <= 5 < high pattern.
  std::vector<int> counts;
  Rng gen(77);
  for (int i = 0; i < 400; ++i) counts.push_back(1);
  for (int i = 0; i < 250; ++i) counts.push_back(3 + static_cast<int>(gen.uniform_int(0, 2)));
  for (int i = 0; i < 120; ++i) counts.push_back(8 + static_cast<int>(gen.uniform_int(0, 4)));
  const DemandLabeler lb = fit_labeler(counts, 3, 3);
  REQUIRE(lb.boundaries.size() == 2);
  CHECK(lb.boundaries[0] == 1);
  CHECK(lb.boundaries[1] == 5);
}
