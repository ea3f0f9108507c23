#pragma once
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "odt/core.hpp"

namespace odt {

/// Self-describing JSON for any fitted classifier in this library (tree,
/// forest, bagging, knn, mlp).  Doubles round-trip exactly; loading a
/// document rebuilds a classifier whose predictions match bit for bit.
nlohmann::ordered_json model_to_json(const Classifier& model,
                                     const std::vector<FeatureMeta>& meta = {});
std::unique_ptr<Classifier> model_from_json(const nlohmann::json& j);

/// Feature metadata recorded at save time (may be empty).
std::vector<FeatureMeta> model_meta_from_json(const nlohmann::json& j);

void save_model(const Classifier& model, const std::string& path,
                const std::vector<FeatureMeta>& meta = {});
std::unique_ptr<Classifier> load_model(const std::string& path);

}  // namespace odt
