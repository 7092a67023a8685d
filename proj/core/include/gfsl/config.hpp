#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gfsl/model.hpp"
#include "gfsl/sampler.hpp"
#include "gfsl/train.hpp"

namespace gfsl {

// Declarative pipeline configuration. Unknown keys anywhere in the document
// are rejected; absent keys take the defaults below. The fully resolved
// config is echoed next to every command output.
struct RunConfig {
    std::string source_data;  // pretraining split directory
    std::string target_data;  // fine-tuning/evaluation split directory

    ModelArch model;

    TrainConfig pretrain;  // epochs 20, batch 32, lr 1e-3, augmentation on

    TrainConfig finetune;  // epochs 100, plateau stop, augmentation off
    ShotSpec shot;

    double eval_threshold = 0.5;
    bool eval_sweep = false;
    bool eval_balanced_test = false;
    int eval_repeats = 10;
    double eval_confidence = 0.95;

    RunConfig();

    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_file(const std::filesystem::path& path);

    // Fully resolved document (every key present).
    std::string to_json_text() const;
    void echo_to(const std::filesystem::path& path) const;
};

// "all", "all-balanced"/"all_balanced", or a positive integer K.
ShotSpec parse_shot_spec(const std::string& text);

}  // namespace gfsl
