#pragma once

#include <string>
#include <vector>

#include "cdcl/sample.hpp"
#include "cdcl/skeleton.hpp"

namespace cdcl {

// Ground-truth maps at head-output resolution. PAF channels are stored as
// (2c, 2c+1) = (x, y) components of limb c's field.
struct TargetBundle {
    int J = 0, C = 0, Z = 0;
    int h = 0, w = 0;
    std::vector<float> K;    // J * h * w
    std::vector<float> P;    // 2C * h * w
    std::vector<uint8_t> B;  // h * w part indices; empty when !has_parts
    std::vector<uint8_t> M;  // h * w binary mask
    bool has_parts = false;
};

// Per keypoint type, max over persons of exp(-|theta - x|^2 / (2 sigma^2)).
// Coordinates are in units of the (h, w) grid. Unlabeled keypoints
// contribute nothing.
std::vector<float> keypoint_confidence_maps(const std::vector<PersonAnnotation>& persons,
                                            const SkeletonSpec& spec, float sigma,
                                            int h, int w);

// Unit vector src->dst inside the oriented rectangle of half-width
// limb_width around each limb segment; overlapping same-type limbs average.
// Zero-length limbs are skipped and counted in *degenerate_limbs.
std::vector<float> paf_maps(const std::vector<PersonAnnotation>& persons,
                            const SkeletonSpec& spec, float limb_width, int h, int w,
                            int* degenerate_limbs = nullptr);

// Nearest-neighbor resample of a part-index map to (h, w).
std::vector<uint8_t> part_label_maps(const LabelMap& part_region,
                                     const PartTaxonomy& taxonomy, int h, int w);

// 1 everywhere except inside declared ignore regions of real-domain
// samples. Region coordinates are image pixels; the mask pixel (x, y)
// corresponds to image point ((x+0.5)*iw/w - 0.5, (y+0.5)*ih/h - 0.5).
std::vector<uint8_t> visibility_mask(const AnnotatedSample& sample, int h, int w);

// Compiles a sample's annotations into head-resolution targets for the
// given stride: output grid point o covers image pixel o*stride+(stride-1)/2.
TargetBundle make_targets(const AnnotatedSample& sample, const SkeletonSpec& spec,
                          const PartTaxonomy& taxonomy, int stride, float sigma,
                          float limb_width);

// Grayscale PNG per channel plus an index.json, for eyeballing targets.
void dump_targets(const TargetBundle& bundle, const std::string& dir);

}  // namespace cdcl
