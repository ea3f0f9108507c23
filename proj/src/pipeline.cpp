#include "odt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <utility>

#include "odt/calendar.hpp"
#include "odt/csv.hpp"
#include "odt/eval.hpp"
#include "odt/ingest.hpp"
#include "odt/model_io.hpp"
#include "odt/rng.hpp"
#include "odt/shapley.hpp"

namespace odt {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kClusterStream = 0x636c7573;
constexpr std::uint64_t kTuneStream = 0x74756e65;
constexpr std::uint64_t kFitStream = 0x666974;
constexpr std::uint64_t kSubsampleStream = 0x737562;
constexpr std::uint64_t kBackgroundStream = 0x6267;
constexpr std::uint64_t kInstanceStream = 0x696e7374;

int task_index(Task t) { return t == Task::production ? 0 : 1; }

int family_index(ModelFamily f) {
  switch (f) {
    case ModelFamily::rf: return 0;
    case ModelFamily::bagging: return 1;
    case ModelFamily::ann: return 2;
    case ModelFamily::dnn: return 3;
  }
  return 0;
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw MissingArtifact(path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

void write_json_artifact(const std::string& path, const ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

json read_json_artifact(const std::string& path) {
  require_file(path);
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  try {
    json j;
    is >> j;
    return j;
  } catch (const std::exception& e) {
    throw std::runtime_error("cannot parse " + path + ": " + e.what());
  }
}

/// Per-run entry in <out>/manifest.json; plain json keeps keys sorted so the
/// file is byte-identical however the stages were ordered.
void update_manifest(const std::string& out_dir, const std::string& key,
                     std::vector<std::string> inputs, std::vector<std::string> outputs,
                     std::uint64_t seed) {
  const std::string path = join(out_dir, "manifest.json");
  json m;
  if (fs::exists(path)) m = read_json_artifact(path);
  m["format"] = "odt-manifest";
  // Inputs inside the out dir are stored relative to it so reruns into a
  // different directory still produce identical manifests.
  const std::string prefix = out_dir.empty() ? "" : out_dir + "/";
  for (auto& in : inputs)
    if (!prefix.empty() && in.rfind(prefix, 0) == 0) in = in.substr(prefix.size());
  std::sort(inputs.begin(), inputs.end());
  std::sort(outputs.begin(), outputs.end());
  m["runs"][key] = {{"inputs", inputs},
                    {"outputs", outputs},
                    {"seed", seed},
                    {"wall_time_seconds", 0}};
  write_text(path, m.dump(2) + "\n");
}

int parse_int_field(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("bad integer '" + s + "' in " + what);
  }
}

std::string resolved_trips_path(const ProjectConfig& cfg) {
  return cfg.trips_csv.empty() ? join(cfg.out_dir, "trips.csv") : cfg.trips_csv;
}

std::string resolved_census_path(const ProjectConfig& cfg) {
  return cfg.census_csv.empty() ? join(cfg.out_dir, "census.csv") : cfg.census_csv;
}

CsvTable production_counts_table(const std::vector<ProductionRow>& rows) {
  CsvTable t;
  t.header = {"date", "da_id", "count", "hours_of_operation", "day_of_week", "month_of_year"};
  for (const auto& r : rows)
    t.rows.push_back({format_date(r.date), r.da_id, std::to_string(r.count),
                      std::to_string(r.context.hours_of_operation),
                      std::to_string(r.context.day_of_week),
                      std::to_string(r.context.month_of_year)});
  return t;
}

CsvTable distribution_counts_table(const std::vector<DistributionRow>& rows) {
  CsvTable t;
  t.header = {"date", "origin_da", "dest_da", "count", "hours_of_operation", "day_of_week",
              "month_of_year"};
  for (const auto& r : rows)
    t.rows.push_back({format_date(r.date), r.origin_da, r.dest_da, std::to_string(r.count),
                      std::to_string(r.context.hours_of_operation),
                      std::to_string(r.context.day_of_week),
                      std::to_string(r.context.month_of_year)});
  return t;
}

int required_col(const CsvTable& t, const std::string& name, const std::string& path) {
  const int c = t.col(name);
  if (c < 0) throw std::runtime_error(path + ": missing column '" + name + "'");
  return c;
}

TripContext context_from_row(const CsvTable& t, const std::vector<std::string>& row,
                             const std::string& path) {
  TripContext ctx;
  ctx.hours_of_operation =
      parse_int_field(row[static_cast<std::size_t>(required_col(t, "hours_of_operation", path))],
                      path);
  ctx.day_of_week =
      parse_int_field(row[static_cast<std::size_t>(required_col(t, "day_of_week", path))], path);
  ctx.month_of_year =
      parse_int_field(row[static_cast<std::size_t>(required_col(t, "month_of_year", path))], path);
  return ctx;
}

Date date_from_row(const std::string& s, const std::string& path) {
  auto d = parse_date(s);
  if (!d) throw std::runtime_error(path + ": bad date '" + s + "'");
  return *d;
}

std::vector<ProductionRow> read_production_counts(const std::string& path) {
  const CsvTable t = read_csv_file(path);
  const int c_date = required_col(t, "date", path);
  const int c_da = required_col(t, "da_id", path);
  const int c_count = required_col(t, "count", path);
  std::vector<ProductionRow> rows;
  for (const auto& r : t.rows) {
    ProductionRow pr;
    pr.date = date_from_row(r[static_cast<std::size_t>(c_date)], path);
    pr.da_id = r[static_cast<std::size_t>(c_da)];
    pr.count = parse_int_field(r[static_cast<std::size_t>(c_count)], path);
    pr.context = context_from_row(t, r, path);
    rows.push_back(std::move(pr));
  }
  return rows;
}

std::vector<DistributionRow> read_distribution_counts(const std::string& path) {
  const CsvTable t = read_csv_file(path);
  const int c_date = required_col(t, "date", path);
  const int c_o = required_col(t, "origin_da", path);
  const int c_d = required_col(t, "dest_da", path);
  const int c_count = required_col(t, "count", path);
  std::vector<DistributionRow> rows;
  for (const auto& r : t.rows) {
    DistributionRow dr;
    dr.date = date_from_row(r[static_cast<std::size_t>(c_date)], path);
    dr.origin_da = r[static_cast<std::size_t>(c_o)];
    dr.dest_da = r[static_cast<std::size_t>(c_d)];
    dr.count = parse_int_field(r[static_cast<std::size_t>(c_count)], path);
    dr.context = context_from_row(t, r, path);
    rows.push_back(std::move(dr));
  }
  return rows;
}

/// Largest-remainder apportionment of `total` across class counts; every
/// nonempty class keeps at least one row and never exceeds its count.
std::array<int, 3> apportion(int total, const std::array<int, 3>& counts) {
  const int n = counts[0] + counts[1] + counts[2];
  std::array<int, 3> out{0, 0, 0};
  std::array<double, 3> frac{0, 0, 0};
  int assigned = 0;
  for (int c = 0; c < 3; ++c) {
    if (counts[c] == 0) continue;
    const double quota = static_cast<double>(total) * counts[c] / n;
    out[c] = static_cast<int>(quota);
    frac[c] = quota - out[c];
    assigned += out[c];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
  for (int i = 0; assigned < total && i < 3; ++i) {
    const int c = order[static_cast<std::size_t>(i)];
    if (counts[c] > out[c]) {
      ++out[c];
      ++assigned;
    }
  }
  for (int c = 0; c < 3; ++c) {
    if (counts[c] > 0 && out[c] == 0) {
      for (int d = 0; d < 3; ++d) {
        if (out[d] > 1) {
          --out[d];
          ++out[c];
          break;
        }
      }
    }
    out[c] = std::min(out[c], counts[c]);
  }
  return out;
}

LabeledDataset stratified_subsample(const LabeledDataset& d, int cap, std::uint64_t seed) {
  if (cap <= 0 || d.rows() <= cap) return d;
  std::array<std::vector<int>, 3> by_class;
  for (int i = 0; i < d.rows(); ++i)
    by_class[static_cast<std::size_t>(d.y[static_cast<std::size_t>(i)])].push_back(i);
  const std::array<int, 3> counts{static_cast<int>(by_class[0].size()),
                                  static_cast<int>(by_class[1].size()),
                                  static_cast<int>(by_class[2].size())};
  const std::array<int, 3> take = apportion(cap, counts);
  Rng rng(seed);
  std::vector<int> keep;
  for (int c = 0; c < 3; ++c) {
    rng.shuffle(by_class[static_cast<std::size_t>(c)]);
    for (int i = 0; i < take[static_cast<std::size_t>(c)]; ++i)
      keep.push_back(by_class[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)]);
  }
  std::sort(keep.begin(), keep.end());
  return take_rows(d, keep);
}

ZoneRegistry load_census_profiles(const std::string& path) {
  require_file(path);
  const CensusParseResult parsed = parse_census(read_csv_file(path));
  if (!parsed.rejects.empty())
    throw std::runtime_error(path + ": " + std::to_string(parsed.rejects.size()) +
                             " malformed census rows");
  return parsed.registry;
}

std::string family_tag(Task t, ModelFamily f) {
  return to_string(t) + "_" + to_string(f);
}

ordered_json accuracy_json(const ConfusionMatrix& cm) {
  const ClassAccuracy pca = per_class_accuracy(cm);
  const OverallAccuracy oa = overall_accuracy(cm);
  ordered_json j;
  ordered_json counts = ordered_json::array();
  for (int r = 0; r < 3; ++r)
    counts.push_back({cm.counts(r, 0), cm.counts(r, 1), cm.counts(r, 2)});
  j["confusion"] = std::move(counts);
  ordered_json pe = ordered_json::array(), pr = ordered_json::array();
  for (int c = 0; c < 3; ++c) {
    if (pca.defined[static_cast<std::size_t>(c)]) {
      pe.push_back(pca.exact[static_cast<std::size_t>(c)]);
      pr.push_back(pca.rounded[static_cast<std::size_t>(c)]);
    } else {
      pe.push_back(nullptr);
      pr.push_back(nullptr);
    }
  }
  j["per_class_accuracy_exact"] = std::move(pe);
  j["per_class_accuracy"] = std::move(pr);
  j["overall_accuracy_exact"] = oa.exact;
  j["overall_accuracy"] = oa.rounded;
  return j;
}

CsvTable confusion_table(const ConfusionMatrix& cm) {
  CsvTable t;
  t.header = {"actual", "predicted_low", "predicted_medium", "predicted_high"};
  const std::array<const char*, 3> names{"low", "medium", "high"};
  for (int r = 0; r < 3; ++r)
    t.rows.push_back({names[static_cast<std::size_t>(r)], std::to_string(cm.counts(r, 0)),
                      std::to_string(cm.counts(r, 1)), std::to_string(cm.counts(r, 2))});
  return t;
}

ParamMap params_for_train(const ProjectConfig& cfg, ModelFamily family, std::string* source) {
  const std::string tuned_path = join(cfg.out_dir, tuned_filename(cfg.task, family));
  if (fs::exists(tuned_path)) {
    *source = "tuned";
    return param_map_from_json(read_json_artifact(tuned_path).at("best_config"));
  }
  *source = "defaults";
  return default_params(family, cfg.task);
}

}  // namespace

std::string counts_filename(Task t) {
  return t == Task::production ? "production_counts.csv" : "distribution_counts.csv";
}
std::string labeler_filename(Task t) { return "labeler_" + to_string(t) + ".json"; }
std::string tuned_filename(Task t, ModelFamily f) {
  return "tuned_" + family_tag(t, f) + ".json";
}
std::string trials_filename(Task t, ModelFamily f) {
  return "trials_" + family_tag(t, f) + ".csv";
}
std::string model_filename(Task t, ModelFamily f) {
  return "model_" + family_tag(t, f) + ".json";
}
std::string eval_filename(Task t, ModelFamily f) { return "eval_" + family_tag(t, f) + ".json"; }
std::string confusion_filename(Task t, ModelFamily f) {
  return "confusion_" + family_tag(t, f) + ".csv";
}

ProjectConfig project_config_from_json(const json& j) {
  ProjectConfig cfg;
  if (!j.is_object()) throw std::invalid_argument("project config must be a JSON object");
  static const std::vector<std::string> known = {
      "out_dir",        "trips_csv",        "census_csv",        "model",
      "k",              "k_max",            "iterations",        "cv_folds",
      "seed",           "exclude_intrazonal", "subsample_cap",   "explain_background",
      "explain_instances", "report_iterations", "synth"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("unknown project config key: " + key);
  }
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("trips_csv")) cfg.trips_csv = j.at("trips_csv").get<std::string>();
  if (j.contains("census_csv")) cfg.census_csv = j.at("census_csv").get<std::string>();
  if (j.contains("model")) cfg.task = task_from_string(j.at("model").get<std::string>());
  if (j.contains("k")) cfg.cluster_k = j.at("k").get<int>();
  if (j.contains("k_max")) cfg.k_max = j.at("k_max").get<int>();
  if (j.contains("iterations")) cfg.iterations = j.at("iterations").get<int>();
  if (j.contains("cv_folds")) cfg.cv_folds = j.at("cv_folds").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("exclude_intrazonal"))
    cfg.exclude_intrazonal = j.at("exclude_intrazonal").get<bool>();
  if (j.contains("subsample_cap")) cfg.subsample_cap = j.at("subsample_cap").get<int>();
  if (j.contains("explain_background"))
    cfg.explain_background = j.at("explain_background").get<int>();
  if (j.contains("explain_instances"))
    cfg.explain_instances = j.at("explain_instances").get<int>();
  if (j.contains("report_iterations"))
    cfg.report_iterations = j.at("report_iterations").get<int>();
  if (j.contains("synth")) cfg.synth = synth_config_from_json(j.at("synth"));
  if (cfg.k_max < 2) throw std::invalid_argument("k_max must be >= 2");
  if (cfg.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (cfg.cv_folds < 2) throw std::invalid_argument("cv_folds must be >= 2");
  return cfg;
}

ordered_json project_config_to_json(const ProjectConfig& cfg) {
  ordered_json j;
  j["out_dir"] = cfg.out_dir;
  j["trips_csv"] = cfg.trips_csv;
  j["census_csv"] = cfg.census_csv;
  j["model"] = to_string(cfg.task);
  j["k"] = cfg.cluster_k;
  j["k_max"] = cfg.k_max;
  j["iterations"] = cfg.iterations;
  j["cv_folds"] = cfg.cv_folds;
  j["seed"] = cfg.seed;
  j["exclude_intrazonal"] = cfg.exclude_intrazonal;
  j["subsample_cap"] = cfg.subsample_cap;
  j["explain_background"] = cfg.explain_background;
  j["explain_instances"] = cfg.explain_instances;
  j["report_iterations"] = cfg.report_iterations;
  j["synth"] = synth_config_to_json(cfg.synth);
  return j;
}

ordered_json labeler_to_json(const DemandLabeler& lb, Task t, const ElbowResult& er,
                             bool k_forced, std::uint64_t seed) {
  ordered_json j;
  j["format"] = "odt-labeler";
  j["task"] = to_string(t);
  j["k"] = static_cast<int>(lb.centroids.size());
  j["boundaries"] = lb.boundaries;
  j["centroids"] = lb.centroids;
  j["distortions"] = er.distortions;
  j["elbow_k"] = er.k;
  j["flat_warning"] = er.flat_warning;
  j["k_forced"] = k_forced;
  j["seed"] = seed;
  return j;
}

DemandLabeler labeler_from_json(const json& j) {
  if (!j.contains("format") || j.at("format").get<std::string>() != "odt-labeler")
    throw std::runtime_error("not an odt-labeler document");
  DemandLabeler lb;
  lb.boundaries = j.at("boundaries").get<std::vector<int>>();
  lb.centroids = j.at("centroids").get<std::vector<double>>();
  return lb;
}

LabeledDataset load_task_dataset(const ProjectConfig& cfg) {
  const std::string counts_path = join(cfg.out_dir, counts_filename(cfg.task));
  const std::string census_path = join(cfg.out_dir, "census_profiles.csv");
  const std::string labeler_path = join(cfg.out_dir, labeler_filename(cfg.task));
  require_file(counts_path);
  require_file(census_path);
  require_file(labeler_path);
  const ZoneRegistry census = load_census_profiles(census_path);
  const DemandLabeler lb = labeler_from_json(read_json_artifact(labeler_path));
  LabeledDataset d;
  if (cfg.task == Task::production)
    d = build_production_dataset(read_production_counts(counts_path), census, lb);
  else
    d = build_distribution_dataset(read_distribution_counts(counts_path), census, lb);
  return stratified_subsample(
      d, cfg.subsample_cap,
      derive_seed(cfg.seed, kSubsampleStream, static_cast<std::uint64_t>(task_index(cfg.task))));
}

void run_synth(const ProjectConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  SynthConfig sc = cfg.synth;
  sc.seed = cfg.seed;  // the master seed drives generation
  validate_synth_config(sc);
  const ZoneRegistry census = generate_census(sc);
  const std::vector<TripRecord> trips = generate_trips(sc, census);
  write_csv_file(join(cfg.out_dir, "census.csv"), census_to_csv(census));
  write_csv_file(join(cfg.out_dir, "trips.csv"), trips_to_csv(trips));
  write_json_artifact(join(cfg.out_dir, "synth_config.json"), synth_config_to_json(sc));
  update_manifest(cfg.out_dir, "synth", {}, {"census.csv", "trips.csv", "synth_config.json"},
                  cfg.seed);
}

void run_ingest(const ProjectConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const std::string trips_path = resolved_trips_path(cfg);
  const std::string census_path = resolved_census_path(cfg);
  require_file(trips_path);
  require_file(census_path);

  const CensusParseResult census = parse_census(read_csv_file(census_path));
  const ServiceCalendar cal(cfg.synth.start_date, cfg.synth.n_days);
  const TripParseResult trips =
      parse_trips(read_csv_file(trips_path), TripSchema{}, census.registry, &cal);
  const std::vector<ProductionRow> prod = aggregate_production(trips.records, cal);
  const std::vector<DistributionRow> dist =
      aggregate_distribution(trips.records, cal, cfg.exclude_intrazonal);

  write_csv_file(join(cfg.out_dir, "production_counts.csv"), production_counts_table(prod));
  write_csv_file(join(cfg.out_dir, "distribution_counts.csv"), distribution_counts_table(dist));
  write_csv_file(join(cfg.out_dir, "census_profiles.csv"), census_to_csv(census.registry));
  write_csv_file(join(cfg.out_dir, "trip_rejects.csv"), rejects_to_csv(trips.rejects));
  write_csv_file(join(cfg.out_dir, "census_rejects.csv"), rejects_to_csv(census.rejects));

  ordered_json summary;
  summary["format"] = "odt-ingest-summary";
  summary["n_trips"] = trips.records.size();
  summary["n_trip_rejects"] = trips.rejects.size();
  summary["n_census_rejects"] = census.rejects.size();
  summary["n_zones"] = census.registry.size();
  summary["n_production_rows"] = prod.size();
  summary["n_distribution_rows"] = dist.size();
  summary["exclude_intrazonal"] = cfg.exclude_intrazonal;
  summary["census_warnings"] = census.warnings;
  write_json_artifact(join(cfg.out_dir, "ingest_summary.json"), summary);

  update_manifest(cfg.out_dir, "ingest", {trips_path, census_path},
                  {"production_counts.csv", "distribution_counts.csv", "census_profiles.csv",
                   "trip_rejects.csv", "census_rejects.csv", "ingest_summary.json"},
                  cfg.seed);
}

void run_cluster(const ProjectConfig& cfg) {
  const std::string counts_path = join(cfg.out_dir, counts_filename(cfg.task));
  require_file(counts_path);
  const CsvTable t = read_csv_file(counts_path);
  const int c_count = required_col(t, "count", counts_path);
  std::vector<int> counts;
  for (const auto& r : t.rows)
    counts.push_back(parse_int_field(r[static_cast<std::size_t>(c_count)], counts_path));
  if (counts.empty()) throw std::runtime_error(counts_path + ": no rows to cluster");

  // Frequency-weighted distinct counts feed both the elbow scan and k-means.
  std::map<int, double> freq;
  for (int c : counts) freq[c] += 1.0;
  Matrix points(static_cast<Eigen::Index>(freq.size()), 1);
  Vector weights(static_cast<Eigen::Index>(freq.size()));
  Eigen::Index i = 0;
  for (const auto& [value, w] : freq) {
    points(i, 0) = value;
    weights(i) = w;
    ++i;
  }

  const std::uint64_t seed =
      derive_seed(cfg.seed, kClusterStream, static_cast<std::uint64_t>(task_index(cfg.task)));
  const int k_max = std::min<int>(cfg.k_max, static_cast<int>(freq.size()));
  ElbowResult er;
  if (k_max >= 2)
    er = elbow(points, weights, k_max, seed);
  else {
    er.k = 1;
    er.distortions = {0.0};
    er.flat_warning = true;
  }
  const bool k_forced = cfg.cluster_k > 0;
  const int k = k_forced ? cfg.cluster_k : er.k;
  const DemandLabeler lb = fit_labeler(counts, k, seed);

  write_json_artifact(join(cfg.out_dir, labeler_filename(cfg.task)),
                      labeler_to_json(lb, cfg.task, er, k_forced, seed));
  update_manifest(cfg.out_dir, "cluster:" + to_string(cfg.task), {counts_filename(cfg.task)},
                  {labeler_filename(cfg.task)}, cfg.seed);
}

void run_tune(const ProjectConfig& cfg, ModelFamily family) {
  const LabeledDataset d = load_task_dataset(cfg);
  const SearchSpace space = family_space(family);
  TpeParams tp;
  tp.seed = derive_seed(cfg.seed, kTuneStream,
                        static_cast<std::uint64_t>(task_index(cfg.task) * 4 + family_index(family)));
  const ModelFactory factory = [family](const ParamMap& p) { return build_classifier(family, p); };
  const OptimizeResult r = optimize(space, d, factory, cfg.iterations, tp, cfg.cv_folds);

  ordered_json tuned;
  tuned["format"] = "odt-tuned";
  tuned["task"] = to_string(cfg.task);
  tuned["family"] = to_string(family);
  tuned["iterations"] = cfg.iterations;
  tuned["cv_folds"] = cfg.cv_folds;
  tuned["n_rows"] = d.rows();
  tuned["seed"] = tp.seed;
  tuned["best_index"] = r.best_index;
  tuned["best_objective"] = r.best_objective;
  tuned["best_cv_accuracy"] = r.best_objective < 0 ? -r.best_objective : 0.0;
  tuned["best_config"] = param_map_to_json(r.best_config);
  write_json_artifact(join(cfg.out_dir, tuned_filename(cfg.task, family)), tuned);

  CsvTable trials;
  trials.header = {"trial", "status", "objective", "cv_accuracy", "params", "error"};
  for (const TrialRecord& t : r.trials) {
    const double acc = t.objective < 0 ? -t.objective : 0.0;
    trials.rows.push_back({std::to_string(t.index), t.status, format_double(t.objective),
                           format_double(acc), param_map_to_json(t.config).dump(), t.error});
  }
  write_csv_file(join(cfg.out_dir, trials_filename(cfg.task, family)), trials);

  update_manifest(cfg.out_dir, "tune:" + family_tag(cfg.task, family),
                  {counts_filename(cfg.task), "census_profiles.csv", labeler_filename(cfg.task)},
                  {tuned_filename(cfg.task, family), trials_filename(cfg.task, family)}, cfg.seed);
}

void run_train(const ProjectConfig& cfg, ModelFamily family) {
  const LabeledDataset d = load_task_dataset(cfg);
  std::string source;
  const ParamMap params = params_for_train(cfg, family, &source);
  const auto [train, test] = stratified_split(d, 0.2, cfg.seed);
  auto model = build_classifier(family, params);
  const std::uint64_t fit_seed =
      derive_seed(cfg.seed, kFitStream,
                  static_cast<std::uint64_t>(task_index(cfg.task) * 4 + family_index(family)));
  model->fit(train, fit_seed);
  save_model(*model, join(cfg.out_dir, model_filename(cfg.task, family)), d.meta);

  ordered_json info;
  info["format"] = "odt-train";
  info["task"] = to_string(cfg.task);
  info["family"] = to_string(family);
  info["params_source"] = source;
  info["params"] = param_map_to_json(params);
  info["fit_seed"] = fit_seed;
  info["n_train"] = train.rows();
  info["n_test"] = test.rows();
  write_json_artifact(join(cfg.out_dir, "train_" + family_tag(cfg.task, family) + ".json"), info);

  update_manifest(cfg.out_dir, "train:" + family_tag(cfg.task, family),
                  {counts_filename(cfg.task), "census_profiles.csv", labeler_filename(cfg.task)},
                  {model_filename(cfg.task, family),
                   "train_" + family_tag(cfg.task, family) + ".json"},
                  cfg.seed);
}

nlohmann::ordered_json run_evaluate(const ProjectConfig& cfg, ModelFamily family) {
  const std::string model_path = join(cfg.out_dir, model_filename(cfg.task, family));
  require_file(model_path);
  const auto model = load_model(model_path);
  const LabeledDataset d = load_task_dataset(cfg);
  const auto [train, test] = stratified_split(d, 0.2, cfg.seed);

  std::vector<int> y_pred;
  for (int i = 0; i < test.rows(); ++i) y_pred.push_back(model->predict(test.X.row(i)));
  const ConfusionMatrix cm = confusion(test.y, y_pred);

  ordered_json j;
  j["format"] = "odt-eval";
  j["task"] = to_string(cfg.task);
  j["family"] = to_string(family);
  j["n_train"] = train.rows();
  j["n_test"] = test.rows();
  const ordered_json acc = accuracy_json(cm);
  for (const auto& [key, value] : acc.items()) j[key] = value;
  write_json_artifact(join(cfg.out_dir, eval_filename(cfg.task, family)), j);
  write_csv_file(join(cfg.out_dir, confusion_filename(cfg.task, family)), confusion_table(cm));

  update_manifest(cfg.out_dir, "evaluate:" + family_tag(cfg.task, family),
                  {model_filename(cfg.task, family), counts_filename(cfg.task),
                   "census_profiles.csv", labeler_filename(cfg.task)},
                  {eval_filename(cfg.task, family), confusion_filename(cfg.task, family)},
                  cfg.seed);
  return j;
}

nlohmann::ordered_json fixture_metrics(const std::string& fixture) {
  ConfusionMatrix cm;
  if (fixture == "table2")
    cm = table2_fixture();
  else if (fixture == "table3")
    cm = table3_fixture();
  else
    throw std::invalid_argument("unknown fixture: " + fixture + " (expected table2 or table3)");
  ordered_json j;
  j["format"] = "odt-fixture-metrics";
  j["fixture"] = fixture;
  const ordered_json acc = accuracy_json(cm);
  for (const auto& [key, value] : acc.items()) j[key] = value;
  return j;
}

void run_explain(const ProjectConfig& cfg, ModelFamily family) {
  const std::string model_path = join(cfg.out_dir, model_filename(cfg.task, family));
  require_file(model_path);
  const auto model = load_model(model_path);
  const LabeledDataset d = load_task_dataset(cfg);
  const auto [train, test] = stratified_split(d, 0.2, cfg.seed);

  const int ti = task_index(cfg.task);
  Rng bg_rng(derive_seed(cfg.seed, kBackgroundStream, static_cast<std::uint64_t>(ti)));
  const int n_bg = std::min(cfg.explain_background, static_cast<int>(train.rows()));
  if (n_bg < 1) throw std::runtime_error("explain: empty training split");
  std::vector<int> bg_rows = bg_rng.sample_without_replacement(train.rows(), n_bg);
  std::sort(bg_rows.begin(), bg_rows.end());
  Matrix background(n_bg, d.cols());
  for (int i = 0; i < n_bg; ++i) background.row(i) = train.X.row(bg_rows[static_cast<std::size_t>(i)]);

  Rng in_rng(derive_seed(cfg.seed, kInstanceStream, static_cast<std::uint64_t>(ti)));
  const int n_inst = std::min(cfg.explain_instances, static_cast<int>(test.rows()));
  if (n_inst < 1) throw std::runtime_error("explain: empty test split");
  std::vector<int> inst_rows = in_rng.sample_without_replacement(test.rows(), n_inst);
  std::sort(inst_rows.begin(), inst_rows.end());
  Matrix instances(n_inst, d.cols());
  for (int i = 0; i < n_inst; ++i)
    instances.row(i) = test.X.row(inst_rows[static_cast<std::size_t>(i)]);

  const ShapMatrix sm = shapley_exact(*model, instances, background, d.meta);
  const auto ranked = importance(sm);

  const std::string tag = family_tag(cfg.task, family);
  export_summary_file(sm, join(cfg.out_dir, "shap_summary_" + tag + ".csv"));
  CsvTable imp;
  imp.header = {"rank", "feature", "score"};
  for (std::size_t r = 0; r < ranked.size(); ++r)
    imp.rows.push_back({std::to_string(r + 1),
                        d.meta[static_cast<std::size_t>(ranked[r].first)].name,
                        format_double(ranked[r].second)});
  write_csv_file(join(cfg.out_dir, "shap_importance_" + tag + ".csv"), imp);
  const std::string top_feature = d.meta[static_cast<std::size_t>(ranked.front().first)].name;
  export_dependency_file(sm, top_feature, join(cfg.out_dir, "shap_dependency_" + tag + ".csv"));

  ordered_json j;
  j["format"] = "odt-explain";
  j["task"] = to_string(cfg.task);
  j["family"] = to_string(family);
  j["background_size"] = sm.background_size;
  j["n_instances"] = sm.n_instances();
  j["base_values"] = {sm.base_values(0), sm.base_values(1), sm.base_values(2)};
  j["top_feature"] = top_feature;
  ordered_json imp_j = ordered_json::array();
  for (const auto& [f, score] : ranked)
    imp_j.push_back({{"feature", d.meta[static_cast<std::size_t>(f)].name}, {"score", score}});
  j["importance"] = std::move(imp_j);
  write_json_artifact(join(cfg.out_dir, "explain_" + tag + ".json"), j);

  update_manifest(cfg.out_dir, "explain:" + tag,
                  {model_filename(cfg.task, family), counts_filename(cfg.task),
                   "census_profiles.csv", labeler_filename(cfg.task)},
                  {"shap_summary_" + tag + ".csv", "shap_importance_" + tag + ".csv",
                   "shap_dependency_" + tag + ".csv", "explain_" + tag + ".json"},
                  cfg.seed);
}

void run_report(const ProjectConfig& cfg) {
  ProjectConfig c = cfg;
  c.iterations = cfg.report_iterations;
  fs::create_directories(c.out_dir);

  if (c.trips_csv.empty() || c.census_csv.empty()) {
    run_synth(c);
    c.trips_csv.clear();
    c.census_csv.clear();
  }
  run_ingest(c);
  run_cluster(c);

  const std::array<ModelFamily, 4> families{ModelFamily::rf, ModelFamily::bagging,
                                            ModelFamily::ann, ModelFamily::dnn};
  ordered_json comparison;
  comparison["format"] = "odt-comparison";
  comparison["task"] = to_string(c.task);
  ordered_json runs = ordered_json::array();
  std::string best_family;
  double best_acc = -1.0;
  for (ModelFamily f : families) {
    ordered_json entry;
    entry["family"] = to_string(f);
    try {
      run_tune(c, f);
      run_train(c, f);
      const ordered_json ev = run_evaluate(c, f);
      entry["ok"] = true;
      entry["overall_accuracy_exact"] = ev.at("overall_accuracy_exact");
      entry["overall_accuracy"] = ev.at("overall_accuracy");
      entry["per_class_accuracy"] = ev.at("per_class_accuracy");
      const double acc = ev.at("overall_accuracy_exact").get<double>();
      if (acc > best_acc || (acc == best_acc && to_string(f) < best_family)) {
        best_acc = acc;
        best_family = to_string(f);
      }
    } catch (const std::exception& e) {
      entry["ok"] = false;
      entry["error"] = e.what();
    }
    runs.push_back(std::move(entry));
  }
  if (best_family.empty()) throw std::runtime_error("report: every family failed");
  comparison["runs"] = std::move(runs);
  comparison["best_family"] = best_family;
  write_json_artifact(join(c.out_dir, "comparison.json"), comparison);

  run_explain(c, model_family_from_string(best_family));
  update_manifest(c.out_dir, "report", {}, {"comparison.json"}, c.seed);
}

}  // namespace odt
