#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "odt/calendar.hpp"
#include "odt/core.hpp"
#include "odt/csv.hpp"
#include "odt/eval.hpp"
#include "odt/rng.hpp"
#include "testutil.hpp"

using namespace odt;

TEST_CASE("rng determinism and stream separation") {
  Rng a(7), b(7), c(8);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  bool differs = false;
  Rng a2(7);
  for (int i = 0; i < 100; ++i) differs |= a2.uniform() != c.uniform();
  CHECK(differs);
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 3));
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}

TEST_CASE("rng uniform_int covers closed range") {
  Rng r(3);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 400; ++i) {
    const auto v = r.uniform_int(-2, 3);
    CHECK(v >= -2);
    CHECK(v <= 3);
    seen.insert(v);
  }
  CHECK(seen.size() == 6);
}

TEST_CASE("rng moments are roughly right") {
  Rng r(11);
  double sn = 0, sp = 0, sg = 0, snb = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    sn += r.normal(2.0, 3.0);
    sp += r.poisson(4.4);
    sg += r.gamma(2.0, 1.5);
    snb += r.negative_binomial(4.4, 40.0);
  }
  CHECK(sn / n == doctest::Approx(2.0).epsilon(0.05));
  CHECK(sp / n == doctest::Approx(4.4).epsilon(0.05));
  CHECK(sg / n == doctest::Approx(3.0).epsilon(0.05));
  CHECK(snb / n == doctest::Approx(4.4).epsilon(0.05));
}

TEST_CASE("rng categorical follows weights and rejects bad input") {
  Rng r(5);
  std::vector<double> w{1.0, 0.0, 3.0};
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 8000; ++i) ++counts[r.categorical(w)];
  CHECK(counts[1] == 0);
  CHECK(static_cast<double>(counts[2]) / counts[0] == doctest::Approx(3.0).epsilon(0.15));
  CHECK_THROWS(r.categorical({1.0, -0.5}));
  CHECK_THROWS(r.categorical({0.0, 0.0}));
}

TEST_CASE("rng shuffle and sampling without replacement") {
  Rng r(9);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6};
  auto sorted = v;
  r.shuffle(v);
  auto copy = v;
  std::sort(copy.begin(), copy.end());
  CHECK(copy == sorted);

  const auto s = r.sample_without_replacement(10, 4);
  CHECK(s.size() == 4);
  std::set<int> uniq(s.begin(), s.end());
  CHECK(uniq.size() == 4);
  for (int x : s) {
    CHECK(x >= 0);
    CHECK(x < 10);
  }
  CHECK(r.sample_without_replacement(3, 3).size() == 3);
}

TEST_CASE("date parsing and formatting") {
  auto d = parse_date("2018-09-18");
  REQUIRE(d.has_value());
  CHECK(d->year == 2018);
  CHECK(d->month == 9);
  CHECK(d->day == 18);
  CHECK(format_date(*d) == "2018-09-18");
  CHECK(parse_date("2020-02-29").has_value());
  CHECK_FALSE(parse_date("2019-02-29").has_value());
  CHECK_FALSE(parse_date("2018-13-01").has_value());
  CHECK_FALSE(parse_date("2018-00-10").has_value());
  CHECK_FALSE(parse_date("18-09-2018").has_value());
  CHECK_FALSE(parse_date("2018-9-18x").has_value());
  CHECK_FALSE(parse_date("").has_value());
}

TEST_CASE("weekday and month encodings") {
  // 2018-09-22 was a Saturday; the service week starts there.
  CHECK(day_of_week_sat1({2018, 9, 22}) == 1);
  CHECK(day_of_week_sat1({2018, 9, 23}) == 2);  // Sunday
  CHECK(day_of_week_sat1({2018, 9, 18}) == 4);  // Tuesday
  CHECK(day_of_week_sat1({2018, 9, 21}) == 7);  // Friday
  CHECK(is_weekend({2018, 9, 22}));
  CHECK(is_weekend({2018, 9, 23}));
  CHECK_FALSE(is_weekend({2018, 9, 24}));

  CHECK(month_of_year_sep1({2018, 9, 30}) == 1);
  CHECK(month_of_year_sep1({2018, 10, 1}) == 2);
  CHECK(month_of_year_sep1({2019, 1, 15}) == 5);
  CHECK(month_of_year_sep1({2019, 8, 31}) == 12);
}

TEST_CASE("service calendar window and context") {
  const ServiceCalendar cal = ServiceCalendar::study_default();
  CHECK(cal.n_days() == 254);
  CHECK(cal.start() == Date{2018, 9, 18});
  CHECK(cal.contains({2018, 9, 18}));
  CHECK(cal.date_at(253) == Date{2019, 5, 29});
  CHECK(cal.contains({2019, 5, 29}));
  CHECK_FALSE(cal.contains({2019, 5, 30}));
  CHECK_FALSE(cal.contains({2018, 9, 17}));
  CHECK(cal.index_of({2018, 9, 19}) == 1);
  CHECK(cal.index_of({2020, 1, 1}) == -1);

  const TripContext ctx = cal.context({2018, 9, 22});
  CHECK(ctx.hours_of_operation == 1);  // weekend service hours
  CHECK(ctx.day_of_week == 1);
  CHECK(ctx.month_of_year == 1);
  CHECK(cal.context({2018, 9, 18}).hours_of_operation == 0);
  CHECK_THROWS_WITH_AS(cal.context({2020, 1, 1}), doctest::Contains("2020-01-01"),
                       std::invalid_argument);
}

TEST_CASE("csv round-trip with quoting") {
  CsvTable t;
  t.header = {"a", "b", "c"};
  t.rows.push_back({"plain", "has,comma", "has \"quote\""});
  t.rows.push_back({"line\nbreak", "", "3.5"});
  std::ostringstream os;
  write_csv(os, t);
  std::istringstream is(os.str());
  const CsvTable back = read_csv(is);
  CHECK(back.header == t.header);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0] == t.rows[0]);
  CHECK(back.rows[1] == t.rows[1]);
  CHECK(back.col("b") == 1);
  CHECK(back.col("missing") == -1);
}

TEST_CASE("format_double round-trips exactly") {
  for (double x : {0.1, 1.0 / 3.0, 1628.02, -0.0036382, 1e-300, 123456789.123456789, 0.0}) {
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("argmax3 breaks ties toward the lowest index") {
  CHECK(argmax3(Vector3(0.2, 0.5, 0.3)) == 1);
  CHECK(argmax3(Vector3(0.4, 0.4, 0.2)) == 0);
  CHECK(argmax3(Vector3(0.2, 0.4, 0.4)) == 1);
  CHECK(argmax3(Vector3(1.0, 1.0, 1.0)) == 0);
}

TEST_CASE("feature kind and scaling kind strings") {
  CHECK(feature_kind_from_string(to_string(FeatureKind::binary)) == FeatureKind::binary);
  CHECK(feature_kind_from_string(to_string(FeatureKind::discrete)) == FeatureKind::discrete);
  CHECK(scaling_kind_from_string(to_string(ScalingKind::minmax)) == ScalingKind::minmax);
  CHECK_THROWS(feature_kind_from_string("nope"));
}

TEST_CASE("minmax scaler maps bounds, clamps, and inverts") {
  LabeledDataset d;
  d.X = Matrix(3, 3);
  d.X << 1, 10, 5, 2, 20, 5, 3, 30, 5;
  d.y = {0, 1, 2};
  d.meta = {{"a", FeatureKind::continuous},
            {"b", FeatureKind::discrete},
            {"c", FeatureKind::continuous}};
  const ScalerState s = fit_scaler(d, ScalingKind::minmax);
  CHECK(s.scaled == std::vector<std::uint8_t>{1, 0, 1});
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("'c'") != std::string::npos);

  const Matrix scaled = apply_scaler(s, d.X);
  CHECK(scaled(0, 0) == 0.0);
  CHECK(scaled(2, 0) == 1.0);
  CHECK(scaled(1, 0) == doctest::Approx(0.5));
  CHECK(scaled(1, 1) == 20.0);  // discrete column untouched
  CHECK(scaled(0, 2) == 0.0);   // constant continuous column maps to 0

  RowVector out_of_range(3);
  out_of_range << 100.0, 20.0, 5.0;
  CHECK(apply_scaler(s, out_of_range)(0) == 1.0);  // clamped

  const Matrix inverted = invert_scaler(s, apply_scaler(s, d.X));
  CHECK((inverted.col(0) - d.X.col(0)).cwiseAbs().maxCoeff() < 1e-12);

  const ScalerState raw = fit_scaler(d, ScalingKind::raw);
  CHECK(apply_scaler(raw, d.X) == d.X);
}

TEST_CASE("dataset validation catches structural errors") {
  LabeledDataset d = testutil::make_blobs(4, 1);
  CHECK(validate_dataset(d).empty());

  LabeledDataset bad_width = d;
  bad_width.X = Matrix::Zero(12, 4);
  bad_width.meta.resize(4);
  CHECK_FALSE(validate_dataset(bad_width).empty());
  CHECK(training_violations(bad_width).empty());  // width is fine for training sets

  LabeledDataset bad_label = d;
  bad_label.y[0] = 3;
  CHECK_FALSE(training_violations(bad_label).empty());

  LabeledDataset bad_cell = d;
  bad_cell.X(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(training_violations(bad_cell).empty());

  LabeledDataset bad_rows = d;
  bad_rows.y.pop_back();
  CHECK_FALSE(training_violations(bad_rows).empty());
}

TEST_CASE("confusion matrix basics") {
  const std::vector<int> t{0, 1, 2, 1};
  CHECK_THROWS(confusion(t, {0, 1}));
  CHECK_THROWS(confusion({0, 3}, {0, 1}));

  const ConfusionMatrix perfect = confusion({0, 1, 2}, {0, 1, 2});
  CHECK(perfect.counts.diagonal().sum() == 3);
  CHECK(perfect.counts.sum() == 3);

  const ConfusionMatrix constant = confusion({0, 1, 2}, {1, 1, 1});
  CHECK(constant.counts.col(1).sum() == 3);
  CHECK(constant.trace() == 1);
}

TEST_CASE("confusion from raw label lists reproduces the production fixture") {
  // Build label lists whose grouped counts equal the fixture, then regroup.
  const ConfusionMatrix want = table2_fixture();
  std::vector<int> y_true, y_pred;
  for (int a = 0; a < 3; ++a)
    for (int p = 0; p < 3; ++p)
      for (int i = 0; i < want.counts(a, p); ++i) {
        y_true.push_back(a);
        y_pred.push_back(p);
      }
  CHECK(confusion(y_true, y_pred).counts == want.counts);
  CHECK(want.total() == 527);
}

TEST_CASE("per-class accuracy matches the published tables") {
  const ClassAccuracy t2 = per_class_accuracy(table2_fixture());
  CHECK(t2.rounded == std::array<int, 3>{73, 53, 65});
  CHECK(std::abs(t2.exact[0] - 100.0 * 166 / 226) < 1e-10);
  CHECK(std::abs(t2.exact[1] - 100.0 * 114 / 216) < 1e-10);
  CHECK(std::abs(t2.exact[2] - 100.0 * 55 / 85) < 1e-10);

  const ClassAccuracy t3 = per_class_accuracy(table3_fixture());
  CHECK(t3.rounded == std::array<int, 3>{95, 65, 63});

  ConfusionMatrix diag;
  diag.counts.setIdentity();
  const ClassAccuracy pd = per_class_accuracy(diag);
  CHECK(pd.rounded == std::array<int, 3>{100, 100, 100});

  ConfusionMatrix empty_row;
  empty_row.counts << 5, 0, 0, 0, 0, 0, 1, 1, 1;
  const ClassAccuracy pe = per_class_accuracy(empty_row);
  CHECK(pe.defined[0]);
  CHECK_FALSE(pe.defined[1]);  // undefined, not zero
  CHECK(pe.defined[2]);
}

TEST_CASE("overall accuracy matches the published tables") {
  const OverallAccuracy t2 = overall_accuracy(table2_fixture());
  CHECK(t2.rounded == 64);
  CHECK(std::abs(t2.exact - 100.0 * 335 / 527) < 1e-10);

  const OverallAccuracy t3 = overall_accuracy(table3_fixture());
  CHECK(t3.rounded == 72);
  CHECK(std::abs(t3.exact - 100.0 * 314 / 437) < 1e-10);

  ConfusionMatrix wrong;
  wrong.counts << 0, 5, 0, 0, 0, 5, 5, 0, 0;
  CHECK(overall_accuracy(wrong).exact == 0.0);
  ConfusionMatrix none;
  CHECK_THROWS(overall_accuracy(none));
}

TEST_CASE("overall accuracy is the row-share weighted mean of per-class accuracy") {
  for (const ConfusionMatrix& cm : {table2_fixture(), table3_fixture()}) {
    const ClassAccuracy pca = per_class_accuracy(cm);
    double weighted = 0;
    for (int c = 0; c < 3; ++c)
      weighted += pca.exact[static_cast<std::size_t>(c)] * cm.row_sum(c) / cm.total();
    CHECK(std::abs(weighted - overall_accuracy(cm).exact) < 1e-12);
  }
}

TEST_CASE("stratified split apportions and partitions") {
  LabeledDataset d = testutil::make_blobs(40, 2, 4);  // 120 rows, 40 per class
  auto [train, test] = stratified_split(d, 0.2, 5);
  CHECK(train.rows() == 96);
  CHECK(test.rows() == 24);
  for (int c = 0; c < 3; ++c)
    CHECK(std::count(test.y.begin(), test.y.end(), c) == 8);

  // 50/30/20 at fraction 0.2 -> 10/6/4 in test.
  LabeledDataset mix;
  mix.X = Matrix::Random(100, 2);
  for (int i = 0; i < 100; ++i) mix.y.push_back(i < 50 ? 0 : (i < 80 ? 1 : 2));
  mix.meta = {{"a", FeatureKind::continuous}, {"b", FeatureKind::continuous}};
  auto [tr2, te2] = stratified_split(mix, 0.2, 3);
  CHECK(te2.rows() == 20);
  CHECK(std::count(te2.y.begin(), te2.y.end(), 0) == 10);
  CHECK(std::count(te2.y.begin(), te2.y.end(), 1) == 6);
  CHECK(std::count(te2.y.begin(), te2.y.end(), 2) == 4);

  // Partition: multiset of rows reassembles the dataset.
  auto [tr3, te3] = stratified_split(mix, 0.25, 9);
  CHECK(tr3.rows() + te3.rows() == mix.rows());
  std::multiset<double> all, parts;
  for (int i = 0; i < mix.rows(); ++i) all.insert(mix.X(i, 0));
  for (int i = 0; i < tr3.rows(); ++i) parts.insert(tr3.X(i, 0));
  for (int i = 0; i < te3.rows(); ++i) parts.insert(te3.X(i, 0));
  CHECK(all == parts);

  auto [tr4, te4] = stratified_split(mix, 0.2, 3);
  CHECK(tr4.X == tr2.X);  // same seed, same split

  LabeledDataset tiny = mix;
  tiny.y.assign(100, 0);
  tiny.y[0] = 1;  // class 1 has a single row
  tiny.y[1] = 2;
  tiny.y[2] = 2;
  CHECK_THROWS(stratified_split(tiny, 0.2, 1));
}

TEST_CASE("stratified folds balance classes") {
  std::vector<int> y;
  for (int i = 0; i < 47; ++i) y.push_back(i % 3);
  const auto folds = stratified_fold_assignment(y, 5, 11);
  REQUIRE(folds.size() == y.size());
  for (int c = 0; c < 3; ++c) {
    std::array<int, 5> per_fold{};
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == c) ++per_fold[static_cast<std::size_t>(folds[i])];
    const auto [lo, hi] = std::minmax_element(per_fold.begin(), per_fold.end());
    CHECK(*hi - *lo <= 1);
  }
  CHECK(stratified_fold_assignment(y, 5, 11) == folds);
  CHECK_THROWS_WITH_AS(stratified_fold_assignment({0, 0, 1, 2, 2}, 2, 0),
                       doctest::Contains("class 1"), std::invalid_argument);
}

TEST_CASE("compare_models shares the split and survives family failures") {
  LabeledDataset d = testutil::make_blobs(20, 4, 4);
  std::vector<std::pair<std::string, ClassifierBuilder>> families;
  families.emplace_back("always_two",
                        [] { return std::make_unique<testutil::ConstantClassifier>(2); });
  families.emplace_back("broken", [] { return std::make_unique<testutil::ThrowingClassifier>(); });
  families.emplace_back("always_zero",
                        [] { return std::make_unique<testutil::ConstantClassifier>(0); });
  const ModelComparison mc = compare_models(d, families, 0.2, 17);
  REQUIRE(mc.runs.size() == 3);
  CHECK(mc.runs[0].ok);
  CHECK_FALSE(mc.runs[1].ok);
  CHECK(mc.runs[1].error.find("deliberate") != std::string::npos);
  // Both constant predictors tie at 1/3 accuracy; lexicographic name wins.
  CHECK(mc.best_family == "always_two");
  CHECK(mc.runs[0].overall.exact == doctest::Approx(100.0 / 3));

  const ModelComparison again = compare_models(d, families, 0.2, 17);
  CHECK(again.runs[0].cm.counts == mc.runs[0].cm.counts);
}
