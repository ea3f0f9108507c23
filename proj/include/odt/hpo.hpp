#pragma once
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "odt/core.hpp"
#include "odt/rng.hpp"

namespace odt {

using ParamValue = std::variant<long, double, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

long param_int(const ParamMap& p, const std::string& name);
double param_real(const ParamMap& p, const std::string& name);
const std::string& param_str(const ParamMap& p, const std::string& name);

nlohmann::ordered_json param_map_to_json(const ParamMap& p);
ParamMap param_map_from_json(const nlohmann::json& j);

struct Dimension {
  enum class Kind { uniform_int, uniform_real, log_uniform_real, categorical };
  std::string name;
  Kind kind = Kind::uniform_real;
  double lo = 0, hi = 0;
  std::vector<std::string> options;
  // Conditional gating: the dimension is active only when the (earlier,
  // categorical) parent dimension took one of parent_values.
  std::string parent;
  std::vector<std::string> parent_values;

  static Dimension uniform_int(std::string name, long lo, long hi);
  static Dimension uniform_real(std::string name, double lo, double hi);
  static Dimension log_uniform_real(std::string name, double lo, double hi);
  static Dimension categorical(std::string name, std::vector<std::string> options);
  Dimension& when(std::string parent_name, std::vector<std::string> values);
};

struct SearchSpace {
  std::vector<Dimension> dims;

  const Dimension* find(const std::string& name) const;
  /// Throws on bad bounds, empty options, unknown/cyclic/non-categorical
  /// parents (parents must be declared before their children).
  void validate() const;
};

/// One uniform draw per dimension, honouring conditionality; inactive
/// dimensions are absent from the result.
ParamMap sample_prior(const SearchSpace& space, Rng& rng);

struct TrialRecord {
  int index = 0;
  ParamMap config;
  double objective = 0;  // negative mean CV accuracy; 0 for failed trials
  std::string status = "ok";
  std::string error;
  double wall_time = 0;  // kept at 0: artifacts must not embed wall-clock times
};

nlohmann::ordered_json trial_to_json(const TrialRecord& t);

struct TpeParams {
  double gamma = 0.25;       // quantile of ok trials forming the good set
  int n_candidates = 24;     // candidates drawn from l(x) per suggestion
  int n_startup = 20;        // random trials before TPE engages
  std::string bandwidth_rule = "nn_floor";  // max(range * 0.1, nearest-neighbour distance)
  std::uint64_t seed = 0;
};

void validate_tpe_params(const TpeParams& p);

/// Next configuration: prior sampling while |ok trials| < n_startup, then the
/// best of n_candidates draws from l(x) scored by sum of ln l - ln g over
/// active dimensions.
ParamMap tpe_suggest(const std::vector<TrialRecord>& history, const SearchSpace& space, const TpeParams& params);

/// Stratified k-fold mean accuracy (unweighted over folds).
double kfold_cv(const LabeledDataset& d, const std::function<std::unique_ptr<Classifier>()>& make, int k,
                std::uint64_t seed);

struct OptimizeResult {
  ParamMap best_config;
  double best_objective = 0;
  int best_index = -1;
  std::vector<TrialRecord> trials;
};

class AllTrialsFailed : public std::runtime_error {
 public:
  AllTrialsFailed(const std::string& what, std::vector<TrialRecord> log)
      : std::runtime_error(what), trials(std::move(log)) {}
  std::vector<TrialRecord> trials;
};

using ModelFactory = std::function<std::unique_ptr<Classifier>(const ParamMap&)>;

/// Sequential TPE loop: suggest → k-fold CV → record. Failed fits score as
/// accuracy 0 with status "failed". Deterministic per params.seed.
OptimizeResult optimize(const SearchSpace& space, const LabeledDataset& d, const ModelFactory& factory,
                        int max_iterations, const TpeParams& params, int cv_k = 10);

}  // namespace odt
