#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdcl/image.hpp"
#include "cdcl/model_output.hpp"
#include "cdcl/skeleton.hpp"
#include "cdcl/tensor.hpp"

namespace cdcl::net {

enum class BackbonePreset { tiny, small, paper };

std::string to_string(BackbonePreset p);
BackbonePreset preset_from_string(const std::string& s);

struct ModelConfig {
    BackbonePreset backbone_depth = BackbonePreset::tiny;
    int feature_channels = 32;
    int output_stride = 8;
    SkeletonSpec spec;
    PartTaxonomy taxonomy;
    std::optional<SkeletonSpec> extra_spec;
    uint64_t init_seed = 1;
    std::string backbone_weights;  // optional trunk checkpoint to start from
};

void validate(const ModelConfig& c);

struct Param {
    std::string name;
    std::vector<int> shape;
    std::vector<float> w;
    std::vector<float> g;  // accumulated gradient, same length as w

    size_t count() const { return w.size(); }
};

// One convolution, with an optional activation baked in. Weight layout is
// [out_c][in_c*k*k]; wi/bi index into Model::params.
struct ConvSpec {
    int in_c = 0, out_c = 0, k = 3, stride = 1, pad = 1;
    bool act = true;
    int wi = -1, bi = -1;
};

struct Head {
    std::string name;
    int out_channels = 0;
    std::vector<ConvSpec> layers;  // fixed-size 3x3 stack, then a 1x1 projection
};

struct Model {
    ModelConfig config;
    std::vector<Param> params;
    std::vector<ConvSpec> trunk;  // sequential
    std::vector<int> taps;        // trunk layer indices feeding the pyramid
    ConvSpec mix;                 // 1x1 fuse after pyramid concat
    std::vector<Head> heads;      // kpt, paf, part (+ kpt2, paf2 when extended)
};

// Everything forward() computed, kept for the backward pass.
struct Activations {
    Tensor input;
    std::vector<Tensor> trunk_outs;  // post-activation, one per trunk layer
    std::vector<Tensor> pyramid;     // taps resized to the output grid
    Tensor fused;                    // post mix + activation
    std::vector<std::vector<Tensor>> head_outs;  // per head, per layer
};

struct OutputGrads {
    Tensor dK, dP, dB;
    std::optional<Tensor> dK2, dP2;
};

Model build_model(const ModelConfig& config);

// Image entry point: normalizes bytes to [0,1] floats first.
ModelOutput forward(const Model& m, const ImageU8& image, Activations* acts = nullptr);
ModelOutput forward(const Model& m, const Tensor& input, Activations* acts = nullptr);

// Accumulates parameter gradients (Param::g) from per-head output gradients.
void backward(Model& m, const Activations& acts, const OutputGrads& grads);

void zero_grad(Model& m);

// Adds the novel keypoint/PAF head pair on the shared trunk. Existing
// parameters are untouched. Throws if the model already has five heads.
void extend_heads(Model& m, const SkeletonSpec& novel);

size_t parameter_count(const Model& m);
size_t head_parameter_count(const Model& m, const std::string& head_name);

void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

// Loads and rejects the file unless its spec and taxonomy match the expected
// ones exactly.
Model load_checkpoint_checked(const std::string& path, const SkeletonSpec& spec,
                              const PartTaxonomy& taxonomy);

}  // namespace cdcl::net
