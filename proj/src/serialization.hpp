#ifndef CLCNN_SERIALIZATION_HPP
#define CLCNN_SERIALIZATION_HPP

#include <json.hpp>

#include "data.hpp"
#include "model.hpp"
#include "training.hpp"

namespace clcnn {

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json synth_config_to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const nlohmann::json& j);

}  // namespace clcnn

#endif
