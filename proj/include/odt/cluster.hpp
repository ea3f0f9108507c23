#pragma once
#include <cstdint>
#include <vector>

#include "odt/core.hpp"

namespace odt {

struct KMeansParams {
  int restarts = 10;
  double tol = 1e-6;
  int max_iter = 300;
};

struct KMeansResult {
  int k = 0;
  Matrix centroids;             // k x d, sorted ascending by first coordinate when d == 1
  std::vector<int> assignment;  // cluster index per point
  double distortion = 0;        // total within-cluster weighted SSE
};

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs.
/// Throws when k exceeds the number of distinct points.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansParams& params = {});
KMeansResult kmeans_weighted(const Matrix& points, const Vector& weights, int k, std::uint64_t seed,
                             const KMeansParams& params = {});

struct ElbowResult {
  int k = 1;
  std::vector<double> distortions;  // distortions[i] = D(i + 1)
  bool flat_warning = false;        // D(1) == D(k_max): k = 1 returned
};

/// Normalized max-chord-distance knee over k = 2 .. k_max-1 of a distortion curve.
int elbow_select(const std::vector<double>& distortions, bool* flat_warning = nullptr);

ElbowResult elbow(const Matrix& points, const Vector& weights, int k_max, std::uint64_t seed,
                  const KMeansParams& params = {});

/// Demand levels from integer thresholds: low <= t1 < medium <= t2 < high.
struct DemandLabeler {
  std::vector<int> boundaries;  // ascending; k-1 thresholds
  std::vector<double> centroids;
};

/// k-means on frequency-weighted counts; thresholds at each lower cluster's max count.
DemandLabeler fit_labeler(const std::vector<int>& counts, int k, std::uint64_t seed = 0,
                          const KMeansParams& params = {});

int label(const DemandLabeler& lb, int count);  // throws when count < 1

}  // namespace odt
