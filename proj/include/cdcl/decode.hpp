#pragma once

#include <string>
#include <vector>

#include "cdcl/image.hpp"
#include "cdcl/net/model.hpp"
#include "cdcl/skeleton.hpp"
#include "cdcl/tensor.hpp"

namespace cdcl {

struct KeypointCandidate {
    int type = 0;           // keypoint index within the skeleton
    float x = 0, y = 0;     // image px
    float score = 0;        // [0, 1]
    int id = 0;             // unique within one decode
};

struct PersonSkeleton {
    struct Joint {
        bool present = false;
        float x = 0, y = 0, score = 0;
        int candidate_id = -1;
    };
    std::vector<Joint> joints;                    // length J
    std::vector<std::pair<int, float>> limbs_used;  // (limb index, score)
    double total_score = 0;                       // joint scores + limb scores
};

struct DecodeOptions {
    float peak_threshold = 0.1f;
    float min_limb_score = 0.05f;
    int paf_samples = 10;
    std::vector<float> scales = {0.5f, 1.0f, 1.5f};
};

void validate(const DecodeOptions& options);

// Per-class probabilities at image resolution: softmax of each scale's part
// logits, upsampled, combined by elementwise max.
Tensor multiscale_part_scores(const net::Model& model, const ImageU8& image,
                              const std::vector<float>& scales);

// Per-pixel argmax; ties go to the lowest class index.
LabelMap part_segmentation(const Tensor& scores);

// Strict 4-neighbor local maxima above threshold, refined to subpixel image
// coordinates via a log-parabola fit (exact for sampled Gaussians). Ordered
// by type, then descending score.
std::vector<KeypointCandidate> keypoint_peaks(const Tensor& K_hat, float threshold,
                                              const SkeletonSpec& spec, int stride);

// Mean over n evenly spaced sample points on the segment a->b of the dot
// product between the limb's PAF vector (nearest grid cell) and the unit
// direction of the segment. Zero when a and b coincide.
float limb_score(const Tensor& P_hat, const KeypointCandidate& a, const KeypointCandidate& b,
                 int limb_index, int n_samples, int stride);

// Per limb in spec order: scores all cross-type pairs, accepts greedily by
// descending score, each candidate usable once per limb type; accepted
// limbs merge into skeletons by shared candidate ids (conflicting merges
// are skipped). Candidates on no limb are discarded.
std::vector<PersonSkeleton> greedy_assemble(const std::vector<KeypointCandidate>& candidates,
                                            const Tensor& P_hat, const SkeletonSpec& spec,
                                            float min_limb_score, int paf_samples, int stride);

struct InferResult {
    LabelMap labels;
    std::vector<PersonSkeleton> skeletons;
    std::vector<PersonSkeleton> novel_skeletons;  // only with extended heads
};

InferResult infer(const net::Model& model, const ImageU8& image, const DecodeOptions& options);

}  // namespace cdcl
