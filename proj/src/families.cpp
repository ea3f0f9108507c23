#include "odt/families.hpp"

#include <stdexcept>

namespace odt {

std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::rf: return "rf";
    case ModelFamily::bagging: return "bagging";
    case ModelFamily::ann: return "ann";
    case ModelFamily::dnn: return "dnn";
  }
  throw std::logic_error("bad ModelFamily");
}

std::string to_string(Task t) {
  return t == Task::production ? "production" : "distribution";
}

ModelFamily model_family_from_string(const std::string& s) {
  if (s == "rf" || s == "forest" || s == "random_forest") return ModelFamily::rf;
  if (s == "bagging") return ModelFamily::bagging;
  if (s == "ann") return ModelFamily::ann;
  if (s == "dnn") return ModelFamily::dnn;
  throw std::invalid_argument("unknown model family: " + s);
}

Task task_from_string(const std::string& s) {
  if (s == "production") return Task::production;
  if (s == "distribution") return Task::distribution;
  throw std::invalid_argument("unknown task: " + s);
}

ParamMap default_params(ModelFamily f, Task t) {
  const bool prod = t == Task::production;
  ParamMap p;
  switch (f) {
    case ModelFamily::rf:
      p["n_estimators"] = prod ? 150L : 50L;
      p["criterion"] = std::string(prod ? "gini" : "entropy");
      p["max_depth"] = prod ? 150L : 40L;
      p["max_features"] = std::string("sqrt");
      p["min_samples_leaf_frac"] = prod ? 0.005362 : 0.0036382;
      p["min_samples_split_frac"] = prod ? 0.013786 : 0.00452197;
      break;
    case ModelFamily::bagging:
      p["base"] = std::string(prod ? "knn" : "forest");
      p["n_estimators"] = prod ? 70L : 200L;
      p["max_features_frac"] = prod ? 0.513365 : 0.307943;
      p["max_samples_frac"] = prod ? 0.9265818 : 0.210654;
      p["bootstrap"] = std::string(prod ? "true" : "false");
      p["bootstrap_features"] = std::string("false");
      if (prod)
        p["knn_k"] = 5L;
      else
        p["forest_trees"] = 10L;
      break;
    case ModelFamily::ann:
      p["neurons"] = prod ? 22L : 15L;
      p["hidden_activation"] = std::string(prod ? "tanh" : "relu");
      p["output_activation"] = std::string("softmax");
      p["initializer"] = std::string(prod ? "glorot_uniform" : "uniform");
      p["batch_size"] = std::string("10");
      p["epochs"] = std::string(prod ? "500" : "150");
      p["optimizer"] = std::string(prod ? "adadelta" : "adam");
      break;
    case ModelFamily::dnn:
      p["hidden_layers"] = prod ? 6L : 4L;
      p["neurons"] = prod ? 20L : 15L;
      p["hidden_activation"] = std::string("tanh");
      p["output_activation"] = std::string("sigmoid");
      p["initializer"] = std::string(prod ? "glorot_uniform" : "normal");
      p["batch_size"] = std::string(prod ? "10" : "20");
      p["epochs"] = std::string(prod ? "100" : "300");
      p["optimizer"] = std::string(prod ? "adadelta" : "adam");
      break;
  }
  return p;
}

SearchSpace family_space(ModelFamily f) {
  SearchSpace s;
  switch (f) {
    case ModelFamily::rf:
      s.dims = {
          Dimension::uniform_int("n_estimators", 10, 300),
          Dimension::categorical("criterion", {"gini", "entropy"}),
          Dimension::uniform_int("max_depth", 2, 200),
          Dimension::categorical("max_features", {"sqrt"}),
          Dimension::uniform_real("min_samples_leaf_frac", 0.001, 0.05),
          Dimension::uniform_real("min_samples_split_frac", 0.001, 0.05),
      };
      break;
    case ModelFamily::bagging:
      s.dims = {
          Dimension::categorical("base", {"knn", "forest"}),
          Dimension::uniform_int("n_estimators", 10, 300),
          Dimension::uniform_real("max_features_frac", 0.1, 1.0),
          Dimension::uniform_real("max_samples_frac", 0.1, 1.0),
          Dimension::categorical("bootstrap", {"true", "false"}),
          Dimension::categorical("bootstrap_features", {"false"}),
          Dimension::uniform_int("knn_k", 1, 15).when("base", {"knn"}),
          Dimension::uniform_int("forest_trees", 10, 50).when("base", {"forest"}),
      };
      break;
    case ModelFamily::ann:
      s.dims = {
          Dimension::uniform_int("neurons", 5, 50),
          Dimension::categorical("hidden_activation", {"tanh", "relu"}),
          Dimension::categorical("output_activation", {"softmax"}),
          Dimension::categorical("initializer", {"glorot_uniform", "uniform"}),
          Dimension::categorical("batch_size", {"10", "20", "40"}),
          Dimension::categorical("epochs", {"100", "150", "300", "500"}),
          Dimension::categorical("optimizer", {"adadelta", "adam"}),
      };
      break;
    case ModelFamily::dnn:
      s.dims = {
          Dimension::uniform_int("hidden_layers", 1, 8),
          Dimension::uniform_int("neurons", 5, 50),
          Dimension::categorical("hidden_activation", {"tanh"}),
          Dimension::categorical("output_activation", {"sigmoid"}),
          Dimension::categorical("initializer", {"glorot_uniform", "normal"}),
          Dimension::categorical("batch_size", {"10", "20", "40"}),
          Dimension::categorical("epochs", {"100", "150", "300", "500"}),
          Dimension::categorical("optimizer", {"adadelta", "adam"}),
      };
      break;
  }
  s.validate();
  return s;
}

namespace {

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("param '" + key + "' must be 'true' or 'false', got '" + s + "'");
}

TreeConfig tree_from_params(const ParamMap& p) {
  TreeConfig t;
  t.criterion = split_criterion_from_string(param_str(p, "criterion"));
  t.max_depth = static_cast<int>(param_int(p, "max_depth"));
  const std::string mf = param_str(p, "max_features");
  if (mf == "sqrt")
    t.max_features = MaxFeatures::sqrt();
  else if (mf == "all")
    t.max_features = MaxFeatures::all();
  else
    throw std::invalid_argument("unknown max_features option: " + mf);
  t.min_samples_leaf = SampleSpec::frac(param_real(p, "min_samples_leaf_frac"));
  t.min_samples_split = SampleSpec::frac(param_real(p, "min_samples_split_frac"));
  return t;
}

MlpConfig mlp_from_params(const ParamMap& p, int hidden_layers) {
  MlpConfig c;
  c.hidden_layers = hidden_layers;
  c.neurons_per_hidden = static_cast<int>(param_int(p, "neurons"));
  c.hidden_activation = activation_from_string(param_str(p, "hidden_activation"));
  c.output_activation = output_activation_from_string(param_str(p, "output_activation"));
  c.initializer = initializer_from_string(param_str(p, "initializer"));
  c.batch_size = std::stoi(param_str(p, "batch_size"));
  c.epochs = std::stoi(param_str(p, "epochs"));
  c.optimizer = optimizer_from_string(param_str(p, "optimizer"));
  return c;
}

}  // namespace

std::unique_ptr<Classifier> build_classifier(ModelFamily f, const ParamMap& p) {
  switch (f) {
    case ModelFamily::rf: {
      ForestConfig c;
      c.n_estimators = static_cast<int>(param_int(p, "n_estimators"));
      c.tree = tree_from_params(p);
      return std::make_unique<RandomForest>(c);
    }
    case ModelFamily::bagging: {
      BaggingConfig c;
      const std::string base = param_str(p, "base");
      if (base == "knn") {
        c.base = BaseSpec::knn(static_cast<int>(param_int(p, "knn_k")));
      } else if (base == "forest") {
        ForestConfig fc;
        fc.n_estimators = static_cast<int>(param_int(p, "forest_trees"));
        fc.tree.max_features = MaxFeatures::sqrt();
        c.base = BaseSpec::of_forest(fc);
      } else {
        throw std::invalid_argument("unknown bagging base: " + base);
      }
      c.n_estimators = static_cast<int>(param_int(p, "n_estimators"));
      c.max_features = param_real(p, "max_features_frac");
      c.max_samples = param_real(p, "max_samples_frac");
      c.bootstrap = parse_bool(param_str(p, "bootstrap"), "bootstrap");
      c.bootstrap_features = parse_bool(param_str(p, "bootstrap_features"), "bootstrap_features");
      return std::make_unique<BaggingClassifier>(c);
    }
    case ModelFamily::ann:
      return std::make_unique<MlpClassifier>(mlp_from_params(p, 1));
    case ModelFamily::dnn:
      return std::make_unique<MlpClassifier>(
          mlp_from_params(p, static_cast<int>(param_int(p, "hidden_layers"))));
  }
  throw std::logic_error("bad ModelFamily");
}

}  // namespace odt
