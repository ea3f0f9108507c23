#include "odt/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "odt/rng.hpp"

namespace odt {

namespace {

constexpr std::uint64_t kRestartStream = 0x6b6d65616e73ULL;  // "kmeans"

int count_distinct_rows(const Matrix& pts) {
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(pts.rows()));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    std::vector<double> r(pts.cols());
    for (Eigen::Index j = 0; j < pts.cols(); ++j) r[static_cast<std::size_t>(j)] = pts(i, j);
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return static_cast<int>(rows.size());
}

double sq_dist(const Matrix& pts, Eigen::Index i, const Matrix& centroids, int c) {
  return (pts.row(i) - centroids.row(c)).squaredNorm();
}

// One seeded k-means++ / Lloyd run.
KMeansResult lloyd_run(const Matrix& pts, const Vector& w, int k, std::uint64_t seed, const KMeansParams& p) {
  const Eigen::Index n = pts.rows();
  Rng rng(seed);
  Matrix centroids(k, pts.cols());

  // k-means++ seeding on weighted points
  std::vector<double> d2(static_cast<std::size_t>(n), 0.0);
  {
    std::vector<double> probs(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) probs[static_cast<std::size_t>(i)] = w(i);
    int first = rng.categorical(probs);
    centroids.row(0) = pts.row(first);
    for (int c = 1; c < k; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int cc = 0; cc < c; ++cc) best = std::min(best, sq_dist(pts, i, centroids, cc));
        d2[static_cast<std::size_t>(i)] = best * w(i);
      }
      double total = std::accumulate(d2.begin(), d2.end(), 0.0);
      int pick;
      if (total > 0.0) {
        pick = rng.categorical(d2);
      } else {
        pick = static_cast<int>(rng.uniform_int(0, n - 1));  // all mass on chosen centroids
      }
      centroids.row(c) = pts.row(pick);
    }
  }

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < p.max_iter; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(pts, i, centroids, 0);
      for (int c = 1; c < k; ++c) {
        double d = sq_dist(pts, i, centroids, c);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      assign[static_cast<std::size_t>(i)] = best;
    }
    Matrix sums = Matrix::Zero(k, pts.cols());
    Vector mass = Vector::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += w(i) * pts.row(i);
      mass(assign[static_cast<std::size_t>(i)]) += w(i);
    }
    Matrix next = centroids;
    for (int c = 0; c < k; ++c) {
      if (mass(c) > 0.0) {
        next.row(c) = sums.row(c) / mass(c);
      } else {
        // revive an empty cluster at the point contributing the most distortion
        Eigen::Index far = 0;
        double fd = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          double d = w(i) * sq_dist(pts, i, centroids, assign[static_cast<std::size_t>(i)]);
          if (d > fd) {
            fd = d;
            far = i;
          }
        }
        next.row(c) = pts.row(far);
      }
    }
    double shift = (next - centroids).rowwise().norm().maxCoeff();
    centroids = next;
    if (shift < p.tol) break;
  }

  // final assignment + distortion against the converged centroids
  double distortion = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double bd = sq_dist(pts, i, centroids, 0);
    for (int c = 1; c < k; ++c) {
      double d = sq_dist(pts, i, centroids, c);
      if (d < bd) {
        bd = d;
        best = c;
      }
    }
    assign[static_cast<std::size_t>(i)] = best;
    distortion += w(i) * bd;
  }

  KMeansResult r;
  r.k = k;
  r.centroids = centroids;
  r.assignment = std::move(assign);
  r.distortion = distortion;
  return r;
}

void sort_centroids_1d(KMeansResult& r) {
  const int k = r.k;
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return r.centroids(a, 0) < r.centroids(b, 0); });
  std::vector<int> rank(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
  Matrix sorted(k, r.centroids.cols());
  for (int i = 0; i < k; ++i) sorted.row(i) = r.centroids.row(order[static_cast<std::size_t>(i)]);
  r.centroids = sorted;
  for (auto& a : r.assignment) a = rank[static_cast<std::size_t>(a)];
}

}  // namespace

KMeansResult kmeans_weighted(const Matrix& points, const Vector& weights, int k, std::uint64_t seed,
                             const KMeansParams& params) {
  if (points.rows() == 0) throw std::invalid_argument("kmeans: empty point set");
  if (points.rows() != weights.size()) throw std::invalid_argument("kmeans: weight count mismatch");
  if (k <= 0) throw std::invalid_argument("kmeans: k must be positive");
  if (k > count_distinct_rows(points)) {
    throw std::invalid_argument("kmeans: k exceeds the number of distinct points");
  }
  KMeansResult best;
  bool have = false;
  for (int r = 0; r < params.restarts; ++r) {
    KMeansResult run = lloyd_run(points, weights, k, derive_seed(seed, kRestartStream, static_cast<std::uint64_t>(r)), params);
    if (!have || run.distortion < best.distortion) {
      best = std::move(run);
      have = true;
    }
  }
  if (points.cols() == 1) sort_centroids_1d(best);
  return best;
}

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansParams& params) {
  return kmeans_weighted(points, Vector::Ones(points.rows()), k, seed, params);
}

int elbow_select(const std::vector<double>& distortions, bool* flat_warning) {
  const int kmax = static_cast<int>(distortions.size());
  if (flat_warning) *flat_warning = false;
  if (kmax < 3) {
    if (flat_warning) *flat_warning = true;
    return 1;
  }
  double d1 = distortions.front(), dk = distortions.back();
  if (d1 == dk) {
    if (flat_warning) *flat_warning = true;
    return 1;
  }
  // both axes normalized to [0,1]; chord runs (0,1) -> (1,0)
  int best_k = 2;
  double best = -1.0;
  for (int k = 2; k <= kmax - 1; ++k) {
    double x = static_cast<double>(k - 1) / (kmax - 1);
    double y = (distortions[static_cast<std::size_t>(k - 1)] - dk) / (d1 - dk);
    double dist = std::abs(x + y - 1.0) / std::sqrt(2.0);
    if (dist > best) {
      best = dist;
      best_k = k;
    }
  }
  return best_k;
}

ElbowResult elbow(const Matrix& points, const Vector& weights, int k_max, std::uint64_t seed,
                  const KMeansParams& params) {
  if (k_max < 3) throw std::invalid_argument("elbow: k_max must be at least 3");
  ElbowResult r;
  r.distortions.reserve(static_cast<std::size_t>(k_max));
  for (int k = 1; k <= k_max; ++k) {
    r.distortions.push_back(kmeans_weighted(points, weights, k, seed, params).distortion);
  }
  r.k = elbow_select(r.distortions, &r.flat_warning);
  return r;
}

DemandLabeler fit_labeler(const std::vector<int>& counts, int k, std::uint64_t seed, const KMeansParams& params) {
  if (counts.empty()) throw std::invalid_argument("fit_labeler: empty counts");
  std::map<int, double> freq;
  for (int c : counts) freq[c] += 1.0;
  if (static_cast<int>(freq.size()) < k) {
    throw std::invalid_argument("fit_labeler: fewer than k distinct counts");
  }
  Matrix vals(static_cast<Eigen::Index>(freq.size()), 1);
  Vector wts(static_cast<Eigen::Index>(freq.size()));
  Eigen::Index i = 0;
  for (auto& [v, w] : freq) {
    vals(i, 0) = v;
    wts(i) = w;
    ++i;
  }
  KMeansResult km = kmeans_weighted(vals, wts, k, seed, params);
  DemandLabeler lb;
  for (int c = 0; c < k; ++c) lb.centroids.push_back(km.centroids(c, 0));
  // threshold = maximal count inside each lower cluster
  for (int c = 0; c + 1 < k; ++c) {
    int hi = std::numeric_limits<int>::min();
    for (Eigen::Index j = 0; j < vals.rows(); ++j) {
      if (km.assignment[static_cast<std::size_t>(j)] == c) {
        hi = std::max(hi, static_cast<int>(std::lround(vals(j, 0))));
      }
    }
    lb.boundaries.push_back(hi);
  }
  return lb;
}

int label(const DemandLabeler& lb, int count) {
  if (count < 1) throw std::invalid_argument("label: count must be at least 1");
  for (std::size_t i = 0; i < lb.boundaries.size(); ++i) {
    if (count <= lb.boundaries[i]) return static_cast<int>(i);
  }
  return static_cast<int>(lb.boundaries.size());
}

}  // namespace odt
