#pragma once

#include <string>

#include "ladder/dataset.hpp"
#include "ladder/trainer.hpp"

namespace ladder {

// JSON forms shared by checkpoints, the C API and the CLI. Parsing starts from
// defaults and overrides only the keys present; unknown keys are a ConfigError.
std::string to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);
TrainConfig train_config_from_json(const std::string& text, const TrainConfig& base);

std::string to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const std::string& text);

const char* loss_family_name(LossFamily f) noexcept;
LossFamily parse_loss_family(const std::string& name);

}  // namespace ladder
