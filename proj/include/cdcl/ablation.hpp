#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdcl/synthgen.hpp"
#include "cdcl/trainer.hpp"

namespace cdcl {

// One ablation study: fixed training budget and scene template, varied along
// the requested axes, each cell repeated over the listed seeds.
struct AblationConfig {
    TrainConfig shared;  // model + training budget; manifests/out_dir are per cell
    SceneConfig scene;   // generation template
    int syn_count = 24;
    int real_count = 24;
    int eval_count = 12;
    std::vector<uint64_t> seeds = {1, 2, 3};
    std::vector<std::string> axes = {"configuration", "appearance", "model_pool",
                                     "background_pool"};
    std::vector<TrainMode> configurations = {TrainMode::SYN, TrainMode::NO_SP, TrainMode::CDCL};
    std::vector<Appearance> appearances = {Appearance::original, Appearance::no_background,
                                           Appearance::grayscale, Appearance::binary_mask};
    std::vector<int> model_pools = {1, 4, 8};
    std::vector<int> background_pools = {1, 8, 64};
    std::string out_dir;
};

void validate(const AblationConfig& config);

struct AblationCell {
    std::string axis;
    std::string value;
    uint64_t seed = 0;
    double miou = 0;
};

// Pseudo-real training/eval scenes are shared per seed; synthetic training
// data is regenerated per cell so it differs only along the cell's axis.
// The configuration axis trains on blank-background synthetic scenes; the
// other axes train the full mixed configuration on composite backgrounds.
// Raw cells land in cells.csv row by row as they complete; per-axis medians
// go to summary.csv and a bar plot PNG per axis.
std::vector<AblationCell> ablation_suite(const AblationConfig& config);

// Median over seeds for one (axis, value); helper shared with the tests.
double median(std::vector<double> values);

}  // namespace cdcl
