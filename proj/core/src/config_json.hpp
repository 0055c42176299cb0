#pragma once

#include <json.hpp>

#include "prnn/dataset.hpp"
#include "prnn/training.hpp"

namespace prnn {

namespace synth {
nlohmann::json dataset_config_to_json(const DatasetConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
DatasetConfig dataset_config_from_json(const nlohmann::json& j);
}  // namespace synth

nlohmann::json hyperparams_to_json(const Hyperparams& h);
/// Missing keys keep the values in `base`; unknown keys are rejected.
Hyperparams hyperparams_from_json(const nlohmann::json& j, const Hyperparams& base);

}  // namespace prnn
