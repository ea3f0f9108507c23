#include "odt/model_io.hpp"

#include <fstream>
#include <stdexcept>
#include <utility>

#include "odt/bagging.hpp"
#include "odt/forest.hpp"
#include "odt/knn.hpp"
#include "odt/mlp.hpp"
#include "odt/tree.hpp"

namespace odt {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json vector_to_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vector_from_json(const json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = a[static_cast<std::size_t>(i)].get<double>();
  return v;
}

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  ordered_json data = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::runtime_error("model json: matrix data size mismatch");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
  return m;
}

ordered_json scaler_to_json(const ScalerState& s) {
  ordered_json j;
  j["kind"] = to_string(s.kind);
  j["lo"] = vector_to_json(s.lo);
  j["hi"] = vector_to_json(s.hi);
  j["scaled"] = s.scaled;
  j["warnings"] = s.warnings;
  return j;
}

ScalerState scaler_from_json(const json& j) {
  ScalerState s;
  s.kind = scaling_kind_from_string(j.at("kind").get<std::string>());
  s.lo = vector_from_json(j.at("lo"));
  s.hi = vector_from_json(j.at("hi"));
  s.scaled = j.at("scaled").get<std::vector<std::uint8_t>>();
  if (j.contains("warnings")) s.warnings = j.at("warnings").get<std::vector<std::string>>();
  return s;
}

std::string max_features_kind_to_string(MaxFeatures::Kind k) {
  switch (k) {
    case MaxFeatures::Kind::all: return "all";
    case MaxFeatures::Kind::sqrt_count: return "sqrt";
    case MaxFeatures::Kind::fraction: return "fraction";
  }
  throw std::logic_error("bad MaxFeatures::Kind");
}

MaxFeatures::Kind max_features_kind_from_string(const std::string& s) {
  if (s == "all") return MaxFeatures::Kind::all;
  if (s == "sqrt") return MaxFeatures::Kind::sqrt_count;
  if (s == "fraction") return MaxFeatures::Kind::fraction;
  throw std::runtime_error("model json: unknown max_features kind: " + s);
}

ordered_json tree_config_to_json(const TreeConfig& c) {
  ordered_json j;
  j["criterion"] = to_string(c.criterion);
  j["max_depth"] = c.max_depth;
  j["max_features"] = {{"kind", max_features_kind_to_string(c.max_features.kind)},
                       {"f", c.max_features.f}};
  j["min_samples_leaf"] = {{"is_fraction", c.min_samples_leaf.is_fraction},
                           {"fraction", c.min_samples_leaf.fraction},
                           {"count", c.min_samples_leaf.count}};
  j["min_samples_split"] = {{"is_fraction", c.min_samples_split.is_fraction},
                            {"fraction", c.min_samples_split.fraction},
                            {"count", c.min_samples_split.count}};
  j["seed"] = c.seed;
  return j;
}

SampleSpec sample_spec_from_json(const json& j) {
  SampleSpec s;
  s.is_fraction = j.at("is_fraction").get<bool>();
  s.fraction = j.at("fraction").get<double>();
  s.count = j.at("count").get<int>();
  return s;
}

TreeConfig tree_config_from_json(const json& j) {
  TreeConfig c;
  c.criterion = split_criterion_from_string(j.at("criterion").get<std::string>());
  c.max_depth = j.at("max_depth").get<int>();
  c.max_features.kind = max_features_kind_from_string(j.at("max_features").at("kind").get<std::string>());
  c.max_features.f = j.at("max_features").at("f").get<double>();
  c.min_samples_leaf = sample_spec_from_json(j.at("min_samples_leaf"));
  c.min_samples_split = sample_spec_from_json(j.at("min_samples_split"));
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

ordered_json tree_body_to_json(const DecisionTree& t) {
  ordered_json j;
  j["config"] = tree_config_to_json(t.config());
  ordered_json nodes = ordered_json::array();
  for (const auto& n : t.nodes()) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"left", n.left},
                     {"right", n.right},
                     {"counts", {n.counts(0), n.counts(1), n.counts(2)}}});
  }
  j["nodes"] = std::move(nodes);
  return j;
}

DecisionTree tree_from_body(const json& j) {
  std::vector<DecisionTree::Node> nodes;
  for (const json& n : j.at("nodes")) {
    DecisionTree::Node node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    const json& c = n.at("counts");
    node.counts = {c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>()};
    nodes.push_back(node);
  }
  return DecisionTree::restore(tree_config_from_json(j.at("config")), std::move(nodes));
}

ordered_json forest_config_to_json(const ForestConfig& c) {
  ordered_json j;
  j["n_estimators"] = c.n_estimators;
  j["tree"] = tree_config_to_json(c.tree);
  j["seed"] = c.seed;
  return j;
}

ForestConfig forest_config_from_json(const json& j) {
  ForestConfig c;
  c.n_estimators = j.at("n_estimators").get<int>();
  c.tree = tree_config_from_json(j.at("tree"));
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

ordered_json forest_body_to_json(const RandomForest& f) {
  ordered_json j;
  j["config"] = forest_config_to_json(f.config());
  ordered_json trees = ordered_json::array();
  for (const auto& t : f.trees()) trees.push_back(tree_body_to_json(t));
  j["trees"] = std::move(trees);
  return j;
}

RandomForest forest_from_body(const json& j) {
  std::vector<DecisionTree> trees;
  for (const json& t : j.at("trees")) trees.push_back(tree_from_body(t));
  return RandomForest::restore(forest_config_from_json(j.at("config")), std::move(trees));
}

ordered_json mlp_config_to_json(const MlpConfig& c) {
  ordered_json j;
  j["hidden_layers"] = c.hidden_layers;
  j["neurons_per_hidden"] = c.neurons_per_hidden;
  j["hidden_activation"] = to_string(c.hidden_activation);
  j["output_activation"] = to_string(c.output_activation);
  j["initializer"] = to_string(c.initializer);
  j["dropout_rate"] = c.dropout_rate;
  j["max_norm_constraint"] = c.max_norm_constraint;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["optimizer"] = to_string(c.optimizer);
  j["learning_rate"] = c.learning_rate;
  j["seed"] = c.seed;
  return j;
}

MlpConfig mlp_config_from_json(const json& j) {
  MlpConfig c;
  c.hidden_layers = j.at("hidden_layers").get<int>();
  c.neurons_per_hidden = j.at("neurons_per_hidden").get<int>();
  c.hidden_activation = activation_from_string(j.at("hidden_activation").get<std::string>());
  c.output_activation =
      output_activation_from_string(j.at("output_activation").get<std::string>());
  c.initializer = initializer_from_string(j.at("initializer").get<std::string>());
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.max_norm_constraint = j.at("max_norm_constraint").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

ordered_json bagging_body_to_json(const BaggingClassifier& b);

ordered_json model_body(const Classifier& model) {
  if (auto* t = dynamic_cast<const DecisionTree*>(&model)) {
    ordered_json j = tree_body_to_json(*t);
    j["kind"] = "tree";
    return j;
  }
  if (auto* f = dynamic_cast<const RandomForest*>(&model)) {
    ordered_json j = forest_body_to_json(*f);
    j["kind"] = "forest";
    return j;
  }
  if (auto* k = dynamic_cast<const KnnClassifier*>(&model)) {
    ordered_json j;
    j["kind"] = "knn";
    j["k"] = k->k();
    j["scaler"] = scaler_to_json(k->scaler());
    j["X"] = matrix_to_json(k->train_X());
    j["y"] = k->train_y();
    return j;
  }
  if (auto* m = dynamic_cast<const MlpClassifier*>(&model)) {
    const FittedMlp& f = m->fitted();
    ordered_json j;
    j["kind"] = "mlp";
    j["config"] = mlp_config_to_json(f.cfg);
    j["scaler"] = scaler_to_json(f.scaler);
    ordered_json w = ordered_json::array(), b = ordered_json::array();
    for (const auto& W : f.params.W) w.push_back(matrix_to_json(W));
    for (const auto& bias : f.params.b) b.push_back(vector_to_json(bias));
    j["W"] = std::move(w);
    j["b"] = std::move(b);
    j["loss_trace"] = f.loss_trace;
    return j;
  }
  if (auto* b = dynamic_cast<const BaggingClassifier*>(&model)) return bagging_body_to_json(*b);
  throw std::invalid_argument("model_to_json: unsupported classifier type");
}

std::unique_ptr<Classifier> model_from_body(const json& j);

ordered_json bagging_body_to_json(const BaggingClassifier& b) {
  const BaggingConfig& c = b.config();
  ordered_json j;
  j["kind"] = "bagging";
  ordered_json base;
  base["base_kind"] = c.base.kind == BaseSpec::Kind::knn
                          ? "knn"
                          : (c.base.kind == BaseSpec::Kind::tree ? "tree" : "forest");
  base["knn_k"] = c.base.knn_k;
  base["tree"] = tree_config_to_json(c.base.tree);
  base["forest"] = forest_config_to_json(c.base.forest);
  j["config"] = {{"base", std::move(base)},
                 {"n_estimators", c.n_estimators},
                 {"max_features", c.max_features},
                 {"max_samples", c.max_samples},
                 {"bootstrap", c.bootstrap},
                 {"bootstrap_features", c.bootstrap_features},
                 {"seed", c.seed}};
  ordered_json est = ordered_json::array();
  for (int e = 0; e < b.n_fitted(); ++e) {
    ordered_json one;
    one["cols"] = b.columns_of(e);
    one["model"] = model_body(b.base_of(e));
    est.push_back(std::move(one));
  }
  j["estimators"] = std::move(est);
  return j;
}

BaggingClassifier bagging_from_body(const json& j) {
  const json& jc = j.at("config");
  BaggingConfig c;
  const json& jb = jc.at("base");
  const std::string bk = jb.at("base_kind").get<std::string>();
  if (bk == "knn")
    c.base.kind = BaseSpec::Kind::knn;
  else if (bk == "tree")
    c.base.kind = BaseSpec::Kind::tree;
  else if (bk == "forest")
    c.base.kind = BaseSpec::Kind::forest;
  else
    throw std::runtime_error("model json: unknown bagging base kind: " + bk);
  c.base.knn_k = jb.at("knn_k").get<int>();
  c.base.tree = tree_config_from_json(jb.at("tree"));
  c.base.forest = forest_config_from_json(jb.at("forest"));
  c.n_estimators = jc.at("n_estimators").get<int>();
  c.max_features = jc.at("max_features").get<double>();
  c.max_samples = jc.at("max_samples").get<double>();
  c.bootstrap = jc.at("bootstrap").get<bool>();
  c.bootstrap_features = jc.at("bootstrap_features").get<bool>();
  c.seed = jc.at("seed").get<std::uint64_t>();

  std::vector<std::pair<std::unique_ptr<Classifier>, std::vector<int>>> parts;
  for (const json& e : j.at("estimators"))
    parts.emplace_back(model_from_body(e.at("model")), e.at("cols").get<std::vector<int>>());
  return BaggingClassifier::restore(std::move(c), std::move(parts));
}

std::unique_ptr<Classifier> model_from_body(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "tree") return std::make_unique<DecisionTree>(tree_from_body(j));
  if (kind == "forest") return std::make_unique<RandomForest>(forest_from_body(j));
  if (kind == "knn") {
    return std::make_unique<KnnClassifier>(
        KnnClassifier::restore(j.at("k").get<int>(), matrix_from_json(j.at("X")),
                               j.at("y").get<std::vector<int>>(), scaler_from_json(j.at("scaler"))));
  }
  if (kind == "mlp") {
    FittedMlp f;
    f.cfg = mlp_config_from_json(j.at("config"));
    f.scaler = scaler_from_json(j.at("scaler"));
    for (const json& w : j.at("W")) f.params.W.push_back(matrix_from_json(w));
    for (const json& b : j.at("b")) f.params.b.push_back(vector_from_json(b));
    if (j.contains("loss_trace")) f.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    return std::make_unique<MlpClassifier>(MlpClassifier::restore(std::move(f)));
  }
  if (kind == "bagging") return std::make_unique<BaggingClassifier>(bagging_from_body(j));
  throw std::runtime_error("model json: unknown kind: " + kind);
}

}  // namespace

nlohmann::ordered_json model_to_json(const Classifier& model,
                                     const std::vector<FeatureMeta>& meta) {
  ordered_json j;
  j["format"] = "odt-model";
  j["version"] = 1;
  ordered_json fm = ordered_json::array();
  for (const auto& m : meta) fm.push_back({{"name", m.name}, {"kind", to_string(m.kind)}});
  j["feature_meta"] = std::move(fm);
  j["model"] = model_body(model);
  return j;
}

std::unique_ptr<Classifier> model_from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j.at("format").get<std::string>() != "odt-model")
    throw std::runtime_error("model json: not an odt-model document");
  return model_from_body(j.at("model"));
}

std::vector<FeatureMeta> model_meta_from_json(const nlohmann::json& j) {
  std::vector<FeatureMeta> meta;
  if (!j.contains("feature_meta")) return meta;
  for (const json& m : j.at("feature_meta"))
    meta.push_back(
        {m.at("name").get<std::string>(), feature_kind_from_string(m.at("kind").get<std::string>())});
  return meta;
}

void save_model(const Classifier& model, const std::string& path,
                const std::vector<FeatureMeta>& meta) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << model_to_json(model, meta).dump(2) << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::unique_ptr<Classifier> load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("cannot parse model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace odt
