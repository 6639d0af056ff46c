#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cdcl/image.hpp"

namespace cdcl {

enum class Domain { synthetic, real };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);

struct IgnoreRect {
    float x = 0, y = 0, w = 0, h = 0;
    bool contains(float px, float py) const {
        return px >= x && px < x + w && py >= y && py < y + h;
    }
    bool operator==(const IgnoreRect&) const = default;
};

struct Keypoint {
    float x = 0, y = 0;
    bool labeled = false;
    bool operator==(const Keypoint&) const = default;
};

struct PersonAnnotation {
    std::vector<Keypoint> keypoints;        // length J of the sample's skeleton
    std::optional<LabelMap> part_region;    // this person's own raster, debug/tests only

    bool operator==(const PersonAnnotation&) const = default;
};

// One training/evaluation image with its labels. Real-domain samples may
// carry `parts`, but the trainer only sees them in the CDCL+Real
// configuration; everything else reads them through the evaluation path.
struct AnnotatedSample {
    ImageU8 image;
    Domain domain = Domain::synthetic;
    std::string skeleton = "coco17";
    std::vector<PersonAnnotation> persons;
    std::optional<LabelMap> parts;
    std::vector<IgnoreRect> ignore_regions;

    bool operator==(const AnnotatedSample&) const = default;
};

}  // namespace cdcl
