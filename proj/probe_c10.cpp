// Probe criterion 10: distribution-data SHAP top importance across seeds.
#include <chrono>
#include <cstdio>

#include "odt/cluster.hpp"
#include "odt/eval.hpp"
#include "odt/forest.hpp"
#include "odt/ingest.hpp"
#include "odt/rng.hpp"
#include "odt/shapley.hpp"
#include "odt/synthgen.hpp"

using namespace odt;

int main() {
  constexpr std::uint64_t kClusterStream = 0x636c7573;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto t0 = std::chrono::steady_clock::now();
    SynthConfig sc;
    sc.seed = seed;
    const ZoneRegistry census = generate_census(sc);
    const auto trips = generate_trips(sc, census);
    const ServiceCalendar cal(sc.start_date, sc.n_days);
    const auto dist = aggregate_distribution(trips, cal);
    std::vector<int> counts;
    for (const auto& r : dist) counts.push_back(r.count);
    const DemandLabeler lb = fit_labeler(counts, 3, derive_seed(seed, kClusterStream, 1));
    LabeledDataset d = build_distribution_dataset(dist, census, lb);
    // stratified subsample to ~600 rows
    if (d.rows() > 600) {
      const double frac = 600.0 / d.rows();
      d = stratified_split(d, frac, seed).second;
    }
    const auto [train, test] = stratified_split(d, 0.2, seed);

    ForestConfig fc;
    fc.n_estimators = 30;
    fc.tree.max_features = MaxFeatures::sqrt();
    fc.tree.max_depth = 12;
    RandomForest rf = fit_forest(train, fc);

    Rng bg_rng(derive_seed(seed, 0x6267, 1));
    auto bg_rows = bg_rng.sample_without_replacement(train.rows(), 40);
    Matrix background(40, d.cols());
    for (int i = 0; i < 40; ++i) background.row(i) = train.X.row(bg_rows[(std::size_t)i]);
    Rng in_rng(derive_seed(seed, 0x696e7374, 1));
    auto in_rows = in_rng.sample_without_replacement(test.rows(), 12);
    Matrix inst(12, d.cols());
    for (int i = 0; i < 12; ++i) inst.row(i) = test.X.row(in_rows[(std::size_t)i]);

    const ShapMatrix sm = shapley_exact(rf, inst, background, d.meta);
    const auto ranked = importance(sm);
    const std::string top = d.meta[(std::size_t)ranked.front().first].name;
    const bool hit = top.rfind("d_", 0) == 0;
    hits += hit;
    auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("seed %llu: rows=%d top=%s %s (%.1fs)\n", (unsigned long long)seed, d.rows(),
                top.c_str(), hit ? "HIT" : "miss", dt);
  }
  std::printf("hits: %d/10\n", hits);
  return 0;
}
