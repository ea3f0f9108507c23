// odt: interpretable demand modelling for on-demand transit.
//
// Staged subcommands hand artifacts to each other through an output
// directory; every run is reproducible from its seed (see README).
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "odt/pipeline.hpp"

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  try {
    nlohmann::json j;
    is >> j;
    return j;
  } catch (const std::exception& e) {
    throw std::runtime_error("cannot parse config file " + path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpretable demand modelling for on-demand transit"};

  std::string config_path, out_dir, model_s, family_s, fixture_s, trips_path, census_path;
  std::uint64_t seed = 0;
  int iterations = 0, cluster_k = 0, k_max = 0, folds = 0, background = 0, instances = 0;
  int subsample_cap = 0, zones = 0, days = 0;
  bool exclude_intrazonal = false;

  app.add_option("--config", config_path, "Project configuration JSON file");
  app.add_option("--seed", seed, "Master seed (default 0)");
  app.add_option("--out", out_dir, "Output directory ('-' prints fixture metrics to stdout)");
  app.add_option("--model", model_s, "Task: production or distribution")
      ->check(CLI::IsMember({"production", "distribution"}));
  app.add_option("--family", family_s, "Model family: rf, bagging, ann, or dnn")
      ->check(CLI::IsMember({"rf", "bagging", "ann", "dnn"}));
  app.add_option("--iterations", iterations, "Tuning iterations");
  app.add_option("--k", cluster_k, "Demand levels k (0 = elbow selection)");
  app.add_option("--k-max", k_max, "Largest k scanned by the elbow method");
  app.add_option("--folds", folds, "Cross-validation folds for tuning");
  app.add_option("--fixture", fixture_s, "Built-in confusion fixture: table2 or table3")
      ->check(CLI::IsMember({"table2", "table3"}));
  app.add_option("--trips", trips_path, "Trip-log CSV (default <out>/trips.csv)");
  app.add_option("--census", census_path, "Census CSV (default <out>/census.csv)");
  app.add_flag("--exclude-intrazonal", exclude_intrazonal,
               "Drop same-zone pairs from the distribution model");
  app.add_option("--background", background, "Background rows for SHAP (default 100)");
  app.add_option("--instances", instances, "Instances to explain (default 20)");
  app.add_option("--subsample-cap", subsample_cap,
                 "Stratified row cap for modelling stages (0 = unlimited)");
  app.add_option("--zones", zones, "Synthetic zone count");
  app.add_option("--days", days, "Synthetic service days");

  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic trip log and census");
  auto* c_ingest = app.add_subcommand("ingest", "Parse and aggregate trips and census");
  auto* c_cluster = app.add_subcommand("cluster", "Discretize demand into levels");
  auto* c_tune = app.add_subcommand("tune", "Bayesian hyperparameter search for one family");
  auto* c_train = app.add_subcommand("train", "Fit one family on the training split");
  auto* c_evaluate = app.add_subcommand("evaluate", "Score a trained model (or a fixture)");
  auto* c_explain = app.add_subcommand("explain", "Shapley attributions for a trained model");
  auto* c_report = app.add_subcommand("report", "Full pipeline into one directory");
  for (auto* sub : {c_synth, c_ingest, c_cluster, c_tune, c_train, c_evaluate, c_explain, c_report})
    sub->fallthrough();
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  try {
    odt::ProjectConfig cfg;
    if (app.count("--config")) cfg = odt::project_config_from_json(read_json_file(config_path));
    if (app.count("--seed")) cfg.seed = seed;
    const bool out_is_stdout = out_dir == "-";
    if (app.count("--out") && !out_is_stdout) cfg.out_dir = out_dir;
    if (app.count("--model")) cfg.task = odt::task_from_string(model_s);
    if (app.count("--iterations")) cfg.iterations = iterations;
    if (app.count("--k")) cfg.cluster_k = cluster_k;
    if (app.count("--k-max")) cfg.k_max = k_max;
    if (app.count("--folds")) cfg.cv_folds = folds;
    if (app.count("--trips")) cfg.trips_csv = trips_path;
    if (app.count("--census")) cfg.census_csv = census_path;
    if (app.count("--exclude-intrazonal")) cfg.exclude_intrazonal = true;
    if (app.count("--background")) cfg.explain_background = background;
    if (app.count("--instances")) cfg.explain_instances = instances;
    if (app.count("--subsample-cap")) cfg.subsample_cap = subsample_cap;
    if (app.count("--zones")) cfg.synth.n_zones = zones;
    if (app.count("--days")) cfg.synth.n_days = days;

    const auto family = [&]() {
      if (family_s.empty() && !app.count("--family"))
        throw UsageError("--family is required for this subcommand");
      return odt::model_family_from_string(family_s);
    };
    if (out_is_stdout && !(c_evaluate->parsed() && app.count("--fixture")))
      throw UsageError("--out - is only supported for evaluate --fixture");

    if (c_synth->parsed()) {
      odt::run_synth(cfg);
    } else if (c_ingest->parsed()) {
      odt::run_ingest(cfg);
    } else if (c_cluster->parsed()) {
      odt::run_cluster(cfg);
    } else if (c_tune->parsed()) {
      odt::run_tune(cfg, family());
    } else if (c_train->parsed()) {
      odt::run_train(cfg, family());
    } else if (c_evaluate->parsed()) {
      if (app.count("--fixture")) {
        const nlohmann::ordered_json j = odt::fixture_metrics(fixture_s);
        if (out_is_stdout) {
          std::cout << j.dump(2) << "\n";
        } else {
          std::filesystem::create_directories(cfg.out_dir);
          const std::string path =
              (std::filesystem::path(cfg.out_dir) / ("metrics_" + fixture_s + ".json")).string();
          std::ofstream os(path);
          if (!os) throw std::runtime_error("cannot open for write: " + path);
          os << j.dump(2) << "\n";
        }
      } else {
        odt::run_evaluate(cfg, family());
      }
    } else if (c_explain->parsed()) {
      odt::run_explain(cfg, family());
    } else if (c_report->parsed()) {
      if (app.count("--iterations")) cfg.report_iterations = iterations;
      odt::run_report(cfg);
    }
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 64;
  } catch (const odt::MissingArtifact& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
