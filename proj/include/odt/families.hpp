#pragma once
#include <memory>
#include <string>

#include "odt/bagging.hpp"
#include "odt/forest.hpp"
#include "odt/hpo.hpp"
#include "odt/mlp.hpp"

namespace odt {

enum class ModelFamily { rf, bagging, ann, dnn };
enum class Task { production, distribution };

std::string to_string(ModelFamily f);
std::string to_string(Task t);
ModelFamily model_family_from_string(const std::string& s);
Task task_from_string(const std::string& s);

/// Published best hyperparameters per family and task.
ParamMap default_params(ModelFamily f, Task t);

/// Tuning space for a family; bounds cover every published best value.
SearchSpace family_space(ModelFamily f);

/// Instantiates an unfitted classifier from a (tuned or default) ParamMap.
std::unique_ptr<Classifier> build_classifier(ModelFamily f, const ParamMap& p);

}  // namespace odt
