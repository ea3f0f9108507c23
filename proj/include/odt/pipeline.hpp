#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "odt/cluster.hpp"
#include "odt/core.hpp"
#include "odt/families.hpp"
#include "odt/synthgen.hpp"

namespace odt {

/// A required upstream artifact is absent; the CLI maps this to exit code 2.
class MissingArtifact : public std::runtime_error {
 public:
  explicit MissingArtifact(std::string p)
      : std::runtime_error("missing artifact: " + p), path(std::move(p)) {}
  std::string path;
};

struct ProjectConfig {
  std::string out_dir = "out";
  std::string trips_csv;   // empty → <out_dir>/trips.csv
  std::string census_csv;  // empty → <out_dir>/census.csv
  Task task = Task::production;
  int cluster_k = 0;  // 0 → elbow selection
  int k_max = 8;
  int iterations = 25;  // tuning budget for the standalone `tune` subcommand
  int cv_folds = 10;
  std::uint64_t seed = 0;
  bool exclude_intrazonal = false;
  int subsample_cap = 1200;  // stratified row cap for modelling stages; 0 = off
  int explain_background = 100;
  int explain_instances = 20;
  int report_iterations = 2;  // tuning budget inside `report`
  SynthConfig synth;
};

/// Strict-keyed JSON; unknown keys are errors. Missing keys keep defaults.
ProjectConfig project_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json project_config_to_json(const ProjectConfig& cfg);

// Artifact names inside the output directory.
std::string counts_filename(Task t);
std::string labeler_filename(Task t);
std::string tuned_filename(Task t, ModelFamily f);
std::string trials_filename(Task t, ModelFamily f);
std::string model_filename(Task t, ModelFamily f);
std::string eval_filename(Task t, ModelFamily f);
std::string confusion_filename(Task t, ModelFamily f);

nlohmann::ordered_json labeler_to_json(const DemandLabeler& lb, Task t, const ElbowResult& er,
                                       bool k_forced, std::uint64_t seed);
DemandLabeler labeler_from_json(const nlohmann::json& j);

/// Rebuilds the modelling dataset from the counts, census-profile, and
/// labeler artifacts, applying the stratified subsample cap.
LabeledDataset load_task_dataset(const ProjectConfig& cfg);

void run_synth(const ProjectConfig& cfg);
void run_ingest(const ProjectConfig& cfg);
void run_cluster(const ProjectConfig& cfg);
void run_tune(const ProjectConfig& cfg, ModelFamily family);
void run_train(const ProjectConfig& cfg, ModelFamily family);
nlohmann::ordered_json run_evaluate(const ProjectConfig& cfg, ModelFamily family);
nlohmann::ordered_json fixture_metrics(const std::string& fixture);  // "table2" | "table3"
void run_explain(const ProjectConfig& cfg, ModelFamily family);
void run_report(const ProjectConfig& cfg);

}  // namespace odt
