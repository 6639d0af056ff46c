#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cdcl/image.hpp"

namespace cdcl {

// Named keypoint set plus the ordered limb list that defines the PAF
// channels. J = keypoints.size(), C = limbs.size().
struct SkeletonSpec {
    std::string name;
    std::vector<std::string> keypoints;
    std::vector<std::pair<int, int>> limbs;  // (src index, dst index)

    int joint_count() const { return static_cast<int>(keypoints.size()); }
    int limb_count() const { return static_cast<int>(limbs.size()); }
    int index_of(const std::string& keypoint) const;  // -1 when absent
    bool operator==(const SkeletonSpec&) const = default;
};

// Ordered part-class names; class 0 is always "background".
struct PartTaxonomy {
    std::string name;
    std::vector<std::string> classes;

    // Foreground class count Z (classes.size() == Z + 1).
    int part_count() const { return static_cast<int>(classes.size()) - 1; }
    int class_count() const { return static_cast<int>(classes.size()); }
    bool operator==(const PartTaxonomy&) const = default;
};

// Total mapping from source class indices to target class indices.
struct TaxonomyProjection {
    std::string source;
    std::string target;
    std::vector<int> mapping;  // mapping[src_class] = target_class

    bool operator==(const TaxonomyProjection&) const = default;
};

// Throws std::invalid_argument when an invariant is broken.
void validate(const SkeletonSpec& spec);
void validate(const PartTaxonomy& taxonomy);
void validate(const TaxonomyProjection& projection, const PartTaxonomy& source,
              const PartTaxonomy& target);

// The 17-keypoint COCO-style skeleton with the 19-pair limb table used by
// the bottom-up pose literature. Limb table reproduced verbatim in the
// implementation and in the README.
SkeletonSpec standard_skeleton();

// 30 keypoints (17 standard + neck + 3 per hand + 3 per foot) joined by a
// 29-limb spanning tree.
SkeletonSpec novel_skeleton();

// 14 foreground part classes plus background.
PartTaxonomy body_part_taxonomy();
// Pascal-style evaluation taxonomy: head/torso/u-arms/l-arms/u-legs/l-legs.
PartTaxonomy pascal_part_taxonomy();

// Hands merge into lower arms, feet into lower legs, left/right merged.
TaxonomyProjection projection_body14_to_pascal6();
TaxonomyProjection identity_projection(const PartTaxonomy& taxonomy);

// Elementwise application of the projection. Rejects out-of-range labels.
LabelMap project_parts(const LabelMap& labels, const TaxonomyProjection& projection);

// JSON round-trip (fields exactly: name, keypoints, limbs / name, classes /
// source, target, mapping).
std::string to_json(const SkeletonSpec& spec);
std::string to_json(const PartTaxonomy& taxonomy);
std::string to_json(const TaxonomyProjection& projection);
SkeletonSpec skeleton_from_json(const std::string& text);
PartTaxonomy taxonomy_from_json(const std::string& text);
TaxonomyProjection projection_from_json(const std::string& text);

}  // namespace cdcl
