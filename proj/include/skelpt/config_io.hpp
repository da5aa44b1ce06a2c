#pragma once

#include "skelpt/train.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace skelpt {

/// Declarative run description consumed by the CLI train/finetune/eval
/// commands: the full training configuration plus the data and output paths.
struct RunConfig {
    TrainConfig train;
    std::string dataset_dir;
    std::string out_dir;

    void validate() const;  // train.validate(); paths may stay empty until the CLI checks them
};

// Strict parsers: every unknown key is an error (reported with its JSON
// pointer), absent keys fall back to the struct defaults, and serializing a
// parsed value writes every field back out, so parse -> serialize produces a
// fully explicit document.
nlohmann::json to_json(const AdamConfig& cfg);
AdamConfig adam_config_from_json(const nlohmann::json& j, const std::string& context);

nlohmann::json to_json(const LossWeights& w);
LossWeights loss_weights_from_json(const nlohmann::json& j, const std::string& context);

nlohmann::json to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& j, const std::string& context);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& context);

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig read_run_config(const std::filesystem::path& file);
void write_run_config(const RunConfig& cfg, const std::filesystem::path& file);

}  // namespace skelpt
