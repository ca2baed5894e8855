#pragma once

// Training configuration files: one flat JSON object, e.g.
//
//   { "paths": 8, "fc_widths": [32, 32], "epochs": 5,
//     "train_images": "mnist/train-images-idx3-ubyte", ... }
//
// Unknown keys are rejected. Relative paths resolve against the directory of
// the config file. Command-line overrides use the same key names.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wavenet/trainer.hpp"

namespace wavenet {

/// Every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

/// Throws Error(Configuration) naming the path when the file is missing or invalid.
TrainConfig load_train_config(const std::filesystem::path& file);

TrainConfig parse_train_config(std::string_view text, const std::filesystem::path& base_dir);

/// Sets one key from its textual value ("8", "[32,32]", "cifar10", ...).
void apply_override(TrainConfig& config, std::string_view key, std::string_view value,
                    const std::filesystem::path& base_dir = {});

/// Flat JSON rendering of `config` accepted by parse_train_config.
std::string dump_train_config(const TrainConfig& config);

}  // namespace wavenet
