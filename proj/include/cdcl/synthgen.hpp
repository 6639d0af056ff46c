#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdcl/rng.hpp"
#include "cdcl/sample.hpp"
#include "cdcl/skeleton.hpp"

namespace cdcl {

enum class Appearance { original, no_background, grayscale, binary_mask };
enum class BackgroundKind { blank_room, composite };

std::string to_string(Appearance a);
Appearance appearance_from_string(const std::string& s);
std::string to_string(BackgroundKind b);
BackgroundKind background_from_string(const std::string& s);

struct SceneConfig {
    int height = 64, width = 64;
    int min_persons = 1, max_persons = 3;
    int model_pool_size = 8;  // distinct avatar styles (palette + proportions)
    Appearance appearance = Appearance::original;
    BackgroundKind background = BackgroundKind::blank_room;
    int background_pool = 100;  // texture seeds for composite backgrounds
    uint64_t seed = 1;
    std::string skeleton = "coco17";  // or "fine30"
    float min_separation = 0.f;       // min gap between person boxes, px
    float margin = 4.f;               // keypoints stay this far inside borders
    bool keep_person_masks = false;   // fill PersonAnnotation::part_region
};

void validate(const SceneConfig& config);

// Count of pose resamples that exhausted the retry bound since process
// start; such persons are placed anyway. Exposed for generator diagnostics.
uint64_t placement_retry_overflows();

// Part class painted under each fine30 keypoint, as drawn (body14 indices).
// The first 17 entries also apply to coco17 annotations.
int keypoint_part_class(int keypoint_index);

// Multi-person scene with per-pixel part labels and exact keypoints. Later
// persons occlude earlier ones in both image and labels.
AnnotatedSample generate_scene(const SceneConfig& config, Rng& rng);

// Same avatars over procedurally textured backgrounds with photometric
// jitter; domain = real. Part labels are retained for evaluation only.
AnnotatedSample generate_pseudo_real(const SceneConfig& config, Rng& rng);

// Writes images/, parts/ (indexed PNG), ann/ and manifest.json under
// out_dir; every sample is derived from (config.seed, index). Returns the
// manifest path. On failure removes everything it wrote.
std::string generate_dataset(const SceneConfig& config, int count, Domain domain,
                             const std::string& out_dir);

}  // namespace cdcl
