#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdcl/evalkit.hpp"
#include "cdcl/losses.hpp"
#include "cdcl/net/model.hpp"
#include "cdcl/rng.hpp"
#include "cdcl/sample.hpp"

namespace cdcl {

// The four training configurations: synthetic-only, no synthetic poses,
// the full mixed objective, and the mixed objective plus real part labels.
enum class TrainMode { SYN, NO_SP, CDCL, CDCL_REAL };

std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

struct TrainConfig {
    TrainMode configuration = TrainMode::CDCL;
    LossWeights weights;
    int batch_size = 10;
    double lr = 0.001;
    int steps = 1;
    uint64_t seed = 1;
    net::ModelConfig model;
    std::string real_manifest;  // pose-labeled real-domain dataset
    std::string syn_manifest;   // fully labeled synthetic dataset
    std::string eval_manifest;  // held-out part-labeled dataset
    float sigma = 1.5f;         // keypoint target width, output-grid px
    float limb_width = 1.0f;    // PAF half-width, output-grid px
    int checkpoint_every = 0;   // extra checkpoints every N steps (0 = off)
    std::string out_dir;
    std::string eval_protocol = "pascal6";  // or "identity"
    bool eval_include_background = true;
    DecodeOptions decode;
};

void validate(const TrainConfig& config);

// Real-domain part targets consumed by the part loss since process start.
// Every configuration except CDCL_REAL must leave this untouched.
uint64_t real_part_consumptions();

struct BatchItem {
    Domain domain = Domain::synthetic;
    size_t index = 0;
};

// Shuffled pass over [0, count); reshuffles independently once exhausted.
class EpochSampler {
  public:
    EpochSampler(size_t count, uint64_t seed);
    size_t next();
    size_t size() const { return order_.size(); }

  private:
    std::vector<size_t> order_;
    size_t cursor_ = 0;
    Rng rng_;
};

// Exactly batch_size/2 samples from each domain, without replacement within
// each domain's current epoch. Rejects odd batch sizes.
std::vector<BatchItem> mixed_batch(EpochSampler& real, EpochSampler& syn, int batch_size);

struct TrainResult {
    net::Model model;  // final parameters; the last good ones after an abort
    std::string final_checkpoint;
    std::string log_path;
    std::vector<LossBreakdown> history;  // one row per logged step
    int steps_completed = 0;
    bool aborted = false;  // non-finite loss or parameters
};

// Runs `steps` Adam updates of the weighted objective on mixed batches
// (synthetic-only batches in SYN mode). Writes an initial, optional
// periodic, and final checkpoint plus a CSV loss log under out_dir.
// Deterministic for a fixed config. Real-domain part labels are stripped
// before the loss in every configuration except CDCL_REAL.
TrainResult train(const TrainConfig& config);

// Same, with the datasets already in memory; manifest paths are ignored.
TrainResult train(const TrainConfig& config, const std::vector<AnnotatedSample>& real,
                  const std::vector<AnnotatedSample>& synthetic);

struct RunResult {
    TrainResult train;
    EvalRow eval;
    std::string csv;  // eval_csv_row line for this configuration
};

// Wires the loss weights implied by the configuration name (SYN: alpha=0,
// NO_SP: beta=0, otherwise as given), trains under out_dir/<name>, then
// evaluates on the eval dataset under the configured protocol.
RunResult run_configuration(TrainMode name, const TrainConfig& shared);

struct SweepCell {
    double beta = 0, gamma = 0;
    double miou = 0;
    std::string run_dir;
};

// One CDCL training per (beta, gamma) pair with alpha fixed at 1.0; eval
// mIOU per cell, appended row by row to out_dir/sweep.csv.
std::vector<SweepCell> sweep(const std::vector<double>& beta_values,
                             const std::vector<double>& gamma_values, const TrainConfig& shared);

}  // namespace cdcl
