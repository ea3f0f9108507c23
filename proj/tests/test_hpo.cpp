#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "odt/hpo.hpp"
#include "odt/knn.hpp"
#include "odt/rng.hpp"
#include "testutil.hpp"

using namespace odt;
using odt::testutil::ConstantClassifier;
using odt::testutil::make_blobs;
using odt::testutil::ThrowingClassifier;

namespace {

constexpr std::uint64_t kSuggestStream = 0x747065ULL;  // mirrors the suggester's stream tag

// Labels the blob layout exactly: class = nearest multiple of 10 on feature 0.
class BlobOracle : public Classifier {
 public:
  void fit(const LabeledDataset&, std::uint64_t) override {}
  Vector3 predict_proba(const RowVector& x) const override {
    Vector3 p = Vector3::Zero();
    const int c = std::clamp(static_cast<int>(std::lround(x(0) / 10.0)), 0, 2);
    p(c) = 1.0;
    return p;
  }
};

SearchSpace quadratic_space() {
  SearchSpace s;
  s.dims = {Dimension::uniform_real("x", 0.0, 10.0), Dimension::uniform_real("y", -5.0, 5.0)};
  return s;
}

}  // namespace

TEST_CASE("param map accessors enforce types") {
  ParamMap p;
  p["n"] = 42L;
  p["f"] = 0.5;
  p["s"] = std::string("gini");
  CHECK(param_int(p, "n") == 42);
  CHECK(param_real(p, "f") == 0.5);
  CHECK(param_real(p, "n") == 42.0);  // ints widen to real
  CHECK(param_str(p, "s") == "gini");
  CHECK_THROWS_WITH_AS(param_int(p, "f"), doctest::Contains("not an integer"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(param_str(p, "n"), doctest::Contains("not a string"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(param_real(p, "s"), doctest::Contains("not numeric"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(param_int(p, "missing"), doctest::Contains("missing parameter"),
                       std::out_of_range);
}

TEST_CASE("param map JSON round trip") {
  ParamMap p;
  p["alpha"] = 0.125;
  p["count"] = 7L;
  p["kind"] = std::string("entropy");
  const auto j = param_map_to_json(p);
  CHECK(j["alpha"] == 0.125);
  CHECK(j["count"] == 7);
  CHECK(j["kind"] == "entropy");
  const ParamMap back = param_map_from_json(j);
  CHECK(back == p);

  CHECK_THROWS_WITH_AS(param_map_from_json(nlohmann::json::array()), doctest::Contains("object"),
                       std::invalid_argument);
  nlohmann::json bad = {{"x", {1, 2}}};
  CHECK_THROWS_WITH_AS(param_map_from_json(bad), doctest::Contains("unsupported"),
                       std::invalid_argument);
}

TEST_CASE("search space validation") {
  SearchSpace s;
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("no dimensions"), std::invalid_argument);

  s.dims = {Dimension::uniform_int("a", 1, 5), Dimension::uniform_int("a", 1, 5)};
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("duplicate"), std::invalid_argument);

  s.dims = {Dimension::uniform_int("a", 5, 5)};
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("lo < hi"), std::invalid_argument);

  s.dims = {Dimension::categorical("c", {})};
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("no options"), std::invalid_argument);

  s.dims = {Dimension::log_uniform_real("l", 0.0, 1.0)};
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("lo > 0"), std::invalid_argument);

  s.dims = {Dimension::uniform_int("child", 1, 5).when("ghost", {"x"})};
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("ghost"), std::invalid_argument);

  // Parents must be categorical and declared first.
  s.dims = {Dimension::uniform_int("p", 1, 5), Dimension::uniform_int("child", 1, 5).when("p", {"3"})};
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("non-categorical"), std::invalid_argument);
  s.dims = {Dimension::uniform_int("child", 1, 5).when("p", {"a"}),
            Dimension::categorical("p", {"a", "b"})};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.dims = {Dimension::categorical("p", {"a", "b"}), Dimension::uniform_int("child", 1, 5).when("p", {})};
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("parent-value"), std::invalid_argument);

  s.dims = {Dimension::categorical("p", {"a", "b"}),
            Dimension::uniform_int("child", 1, 5).when("p", {"a"})};
  CHECK_NOTHROW(s.validate());
  CHECK(s.find("child") != nullptr);
  CHECK(s.find("nope") == nullptr);
}

TEST_CASE("prior sampling honours bounds and conditional gates") {
  SearchSpace s;
  s.dims = {Dimension::categorical("base", {"knn", "forest"}),
            Dimension::uniform_int("k", 1, 15).when("base", {"knn"}),
            Dimension::uniform_int("trees", 10, 50).when("base", {"forest"}),
            Dimension::uniform_real("frac", 0.1, 1.0),
            Dimension::log_uniform_real("lr", 1e-4, 1.0)};
  s.validate();

  Rng rng(12);
  int knn_seen = 0, forest_seen = 0;
  bool small_lr = false, big_lr = false;
  for (int i = 0; i < 300; ++i) {
    const ParamMap p = sample_prior(s, rng);
    const std::string& base = param_str(p, "base");
    if (base == "knn") {
      knn_seen++;
      const long k = param_int(p, "k");
      CHECK(k >= 1);
      CHECK(k <= 15);
      CHECK(p.count("trees") == 0);  // gated off
    } else {
      forest_seen++;
      const long t = param_int(p, "trees");
      CHECK(t >= 10);
      CHECK(t <= 50);
      CHECK(p.count("k") == 0);
    }
    const double f = param_real(p, "frac");
    CHECK(f >= 0.1);
    CHECK(f <= 1.0);
    const double lr = param_real(p, "lr");
    CHECK(lr >= 1e-4);
    CHECK(lr <= 1.0);
    small_lr |= lr < 1e-2;
    big_lr |= lr > 1e-1;
  }
  CHECK(knn_seen > 60);
  CHECK(forest_seen > 60);
  CHECK(small_lr);  // log-uniform spreads mass across decades
  CHECK(big_lr);

  Rng r1(5), r2(5);
  CHECK(sample_prior(s, r1) == sample_prior(s, r2));
}

TEST_CASE("tpe runs its startup phase from a per-step derived stream") {
  const SearchSpace s = quadratic_space();
  TpeParams tp;
  tp.seed = 31;
  tp.n_startup = 20;

  // Empty history: suggestion == prior draw from stream index 0.
  Rng expect0(derive_seed(tp.seed, kSuggestStream, 0));
  CHECK(tpe_suggest({}, s, tp) == sample_prior(s, expect0));

  // Two failed trials: still the startup phase, stream index = history size.
  std::vector<TrialRecord> hist(2);
  hist[0].status = hist[1].status = "failed";
  Rng expect2(derive_seed(tp.seed, kSuggestStream, 2));
  CHECK(tpe_suggest(hist, s, tp) == sample_prior(s, expect2));
}

TEST_CASE("tpe beats matched-seed random search on a quadratic") {
  const SearchSpace s = quadratic_space();
  auto objective = [](const ParamMap& c) {
    const double x = param_real(c, "x"), y = param_real(c, "y");
    return (x - 3.0) * (x - 3.0) + (y - 1.0) * (y - 1.0);
  };
  auto run = [&](std::uint64_t seed, int n_startup) {
    TpeParams tp;
    tp.seed = seed;
    tp.n_startup = n_startup;
    std::vector<TrialRecord> hist;
    double best = 1e18;
    for (int i = 0; i < 60; ++i) {
      TrialRecord t;
      t.index = i;
      t.config = tpe_suggest(hist, s, tp);
      t.objective = objective(t.config);
      best = std::min(best, t.objective);
      hist.push_back(std::move(t));
    }
    return best;
  };

  int wins = 0;
  double tpe_sum = 0, rnd_sum = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double tpe = run(seed, 10);
    const double rnd = run(seed, 1000);  // startup >= iterations: pure random search
    tpe_sum += tpe;
    rnd_sum += rnd;
    if (tpe < rnd) wins++;
  }
  CHECK(wins >= 7);  // measured 8/10; fully deterministic given the seeds
  CHECK(tpe_sum < rnd_sum);
}

TEST_CASE("tpe parameter validation") {
  TpeParams p;
  CHECK_NOTHROW(validate_tpe_params(p));
  p.gamma = 0.0;
  CHECK_THROWS_WITH_AS(validate_tpe_params(p), doctest::Contains("gamma"), std::invalid_argument);
  p = TpeParams{};
  p.gamma = 1.0;
  CHECK_THROWS_AS(validate_tpe_params(p), std::invalid_argument);
  p = TpeParams{};
  p.n_candidates = 0;
  CHECK_THROWS_WITH_AS(validate_tpe_params(p), doctest::Contains("n_candidates"),
                       std::invalid_argument);
  p = TpeParams{};
  p.n_startup = -1;
  CHECK_THROWS_WITH_AS(validate_tpe_params(p), doctest::Contains("n_startup"),
                       std::invalid_argument);
}

TEST_CASE("kfold_cv scores stub classifiers exactly") {
  const LabeledDataset d = make_blobs(30, 3, 4);  // 90 rows, perfectly balanced

  // A constant class-0 answer is right on exactly a third of every fold.
  const double third = kfold_cv(d, [] { return std::make_unique<ConstantClassifier>(0); }, 5, 9);
  CHECK(third == doctest::Approx(1.0 / 3).epsilon(1e-12));

  const double perfect = kfold_cv(d, [] { return std::make_unique<BlobOracle>(); }, 5, 9);
  CHECK(perfect == 1.0);

  CHECK(kfold_cv(d, [] { return std::make_unique<BlobOracle>(); }, 5, 9) == perfect);

  CHECK_THROWS_WITH(kfold_cv(d, [] { return std::make_unique<ThrowingClassifier>(); }, 5, 9),
                    doctest::Contains("deliberate fit failure"));
}

TEST_CASE("optimize records trials and keeps the best ok configuration") {
  const LabeledDataset d = make_blobs(15, 21, 4);
  SearchSpace s;
  s.dims = {Dimension::uniform_int("k", 1, 15)};
  const ModelFactory factory = [](const ParamMap& p) -> std::unique_ptr<Classifier> {
    return std::make_unique<KnnClassifier>(static_cast<int>(param_int(p, "k")));
  };
  TpeParams tp;
  tp.seed = 4;
  tp.n_startup = 5;

  const OptimizeResult res = optimize(s, d, factory, 12, tp, 3);
  REQUIRE(res.trials.size() == 12);
  CHECK(res.best_index >= 0);
  CHECK(res.best_objective <= -0.9);  // knn separates blobs easily
  CHECK(param_int(res.best_config, "k") >= 1);

  // The incumbent trace (best-so-far over ok trials) never worsens, and the
  // reported best matches its reconstruction.
  double incumbent = 1e18;
  for (const auto& t : res.trials) {
    CHECK(t.status == "ok");
    CHECK(t.wall_time == 0.0);
    if (t.objective < incumbent) incumbent = t.objective;
  }
  CHECK(incumbent == res.best_objective);
  CHECK(res.trials[static_cast<std::size_t>(res.best_index)].objective == res.best_objective);

  const OptimizeResult again = optimize(s, d, factory, 12, tp, 3);
  REQUIRE(again.trials.size() == res.trials.size());
  for (std::size_t i = 0; i < res.trials.size(); ++i) {
    CHECK(again.trials[i].config == res.trials[i].config);
    CHECK(again.trials[i].objective == res.trials[i].objective);
  }
}

TEST_CASE("optimize tolerates failing branches and reports total failure") {
  const LabeledDataset d = make_blobs(10, 33, 4);
  SearchSpace s;
  s.dims = {Dimension::categorical("base", {"good", "bad"})};
  const ModelFactory mixed = [](const ParamMap& p) -> std::unique_ptr<Classifier> {
    if (param_str(p, "base") == "bad") return std::make_unique<ThrowingClassifier>();
    return std::make_unique<KnnClassifier>(3);
  };
  TpeParams tp;
  tp.seed = 0;
  tp.n_startup = 4;
  const OptimizeResult res = optimize(s, d, mixed, 10, tp, 3);
  int ok = 0, failed = 0;
  for (const auto& t : res.trials) {
    if (t.status == "ok") {
      ok++;
      CHECK(param_str(t.config, "base") == "good");
    } else {
      failed++;
      CHECK(t.objective == 0.0);
      CHECK(t.error == "deliberate fit failure");
    }
  }
  CHECK(ok > 0);
  CHECK(failed > 0);
  CHECK(param_str(res.best_config, "base") == "good");

  const ModelFactory hopeless = [](const ParamMap&) -> std::unique_ptr<Classifier> {
    return std::make_unique<ThrowingClassifier>();
  };
  try {
    optimize(s, d, hopeless, 4, tp, 3);
    FAIL("expected AllTrialsFailed");
  } catch (const AllTrialsFailed& e) {
    CHECK(e.trials.size() == 4);
    CHECK(doctest::String(e.what()) == doctest::Contains("all 4 trials"));
    CHECK(doctest::String(e.what()) == doctest::Contains("deliberate fit failure"));
  }

  CHECK_THROWS_WITH_AS(optimize(s, d, mixed, 0, tp, 3), doctest::Contains("max_iterations"),
                       std::invalid_argument);
}

TEST_CASE("startup larger than the budget degenerates to matched random search") {
  const LabeledDataset d = make_blobs(10, 55, 4);
  SearchSpace s;
  s.dims = {Dimension::uniform_int("k", 1, 9), Dimension::categorical("c", {"a", "b"})};
  const ModelFactory factory = [](const ParamMap& p) -> std::unique_ptr<Classifier> {
    return std::make_unique<KnnClassifier>(static_cast<int>(param_int(p, "k")));
  };
  TpeParams tp;
  tp.seed = 77;
  tp.n_startup = 999;
  const OptimizeResult res = optimize(s, d, factory, 6, tp, 3);
  for (std::size_t i = 0; i < res.trials.size(); ++i) {
    Rng expect(derive_seed(tp.seed, kSuggestStream, i));
    CHECK(res.trials[i].config == sample_prior(s, expect));
  }
}

TEST_CASE("trial JSON carries errors only when present") {
  TrialRecord t;
  t.index = 3;
  t.config["k"] = 5L;
  t.objective = -0.75;
  const auto ok = trial_to_json(t);
  CHECK(ok["index"] == 3);
  CHECK(ok["status"] == "ok");
  CHECK(!ok.contains("error"));
  CHECK(ok["wall_time"] == 0.0);

  t.status = "failed";
  t.error = "boom";
  t.objective = 0.0;
  const auto bad = trial_to_json(t);
  CHECK(bad["error"] == "boom");
}
