#include "cdcl/skeleton.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace cdcl {

using nlohmann::json;

int SkeletonSpec::index_of(const std::string& keypoint) const {
    auto it = std::find(keypoints.begin(), keypoints.end(), keypoint);
    return it == keypoints.end() ? -1 : static_cast<int>(it - keypoints.begin());
}

void validate(const SkeletonSpec& spec) {
    if (spec.keypoints.empty()) throw std::invalid_argument("skeleton: no keypoints");
    std::set<std::string> names(spec.keypoints.begin(), spec.keypoints.end());
    if (names.size() != spec.keypoints.size())
        throw std::invalid_argument("skeleton '" + spec.name + "': duplicate keypoint names");
    if (spec.limbs.empty()) throw std::invalid_argument("skeleton '" + spec.name + "': needs >= 1 limb");
    std::set<std::pair<int, int>> seen;
    for (auto [a, b] : spec.limbs) {
        if (a < 0 || b < 0 || a >= spec.joint_count() || b >= spec.joint_count())
            throw std::invalid_argument("skeleton '" + spec.name + "': limb index out of range");
        if (!seen.insert({a, b}).second)
            throw std::invalid_argument("skeleton '" + spec.name + "': duplicate limb pair");
    }
}

void validate(const PartTaxonomy& taxonomy) {
    if (taxonomy.classes.empty() || taxonomy.classes[0] != "background")
        throw std::invalid_argument("taxonomy '" + taxonomy.name + "': class 0 must be 'background'");
    std::set<std::string> names(taxonomy.classes.begin(), taxonomy.classes.end());
    if (names.size() != taxonomy.classes.size())
        throw std::invalid_argument("taxonomy '" + taxonomy.name + "': duplicate class names");
}

void validate(const TaxonomyProjection& projection, const PartTaxonomy& source,
              const PartTaxonomy& target) {
    if (projection.mapping.size() != source.classes.size())
        throw std::invalid_argument("projection: mapping must cover every source class");
    for (int t : projection.mapping)
        if (t < 0 || t >= target.class_count())
            throw std::invalid_argument("projection: target class out of range");
    if (projection.mapping[0] != 0)
        throw std::invalid_argument("projection: background must map to background");
}

SkeletonSpec standard_skeleton() {
    SkeletonSpec s;
    s.name = "coco17";
    s.keypoints = {"nose",          "left_eye",      "right_eye",    "left_ear",
                   "right_ear",     "left_shoulder", "right_shoulder", "left_elbow",
                   "right_elbow",   "left_wrist",    "right_wrist",  "left_hip",
                   "right_hip",     "left_knee",     "right_knee",   "left_ankle",
                   "right_ankle"};
    // The 19-pair COCO limb table (0-based), verbatim:
    // (15,13)(13,11)(16,14)(14,12)(11,12)(5,11)(6,12)(5,6)(5,7)(6,8)
    // (7,9)(8,10)(1,2)(0,1)(0,2)(1,3)(2,4)(3,5)(4,6)
    s.limbs = {{15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12},
               {5, 6},   {5, 7},   {6, 8},   {7, 9},   {8, 10},  {1, 2},  {0, 1},
               {0, 2},   {1, 3},   {2, 4},   {3, 5},   {4, 6}};
    return s;
}

SkeletonSpec novel_skeleton() {
    SkeletonSpec s = standard_skeleton();
    s.name = "fine30";
    s.keypoints.insert(s.keypoints.end(),
                       {"neck",
                        "left_thumb", "left_index", "left_pinky",
                        "right_thumb", "right_index", "right_pinky",
                        "left_big_toe", "left_small_toe", "left_heel",
                        "right_big_toe", "right_small_toe", "right_heel"});
    // Spanning tree over the 30 keypoints, rooted at the neck.
    s.limbs = {{17, 0},  {0, 1},   {0, 2},   {1, 3},   {2, 4},           // head
               {17, 5},  {17, 6},  {5, 7},   {6, 8},   {7, 9},  {8, 10},  // arms
               {17, 11}, {17, 12}, {11, 13}, {12, 14}, {13, 15}, {14, 16},  // legs
               {9, 18},  {9, 19},  {9, 20},  {10, 21}, {10, 22}, {10, 23},  // hands
               {15, 24}, {15, 25}, {15, 26}, {16, 27}, {16, 28}, {16, 29}};  // feet
    return s;
}

PartTaxonomy body_part_taxonomy() {
    PartTaxonomy t;
    t.name = "body14";
    t.classes = {"background",     "head",           "torso",
                 "left_upper_arm", "right_upper_arm", "left_lower_arm",
                 "right_lower_arm", "left_hand",      "right_hand",
                 "left_upper_leg", "right_upper_leg", "left_lower_leg",
                 "right_lower_leg", "left_foot",      "right_foot"};
    return t;
}

PartTaxonomy pascal_part_taxonomy() {
    PartTaxonomy t;
    t.name = "pascal6";
    t.classes = {"background", "head", "torso", "upper_arms", "lower_arms",
                 "upper_legs", "lower_legs"};
    return t;
}

TaxonomyProjection projection_body14_to_pascal6() {
    TaxonomyProjection p;
    p.source = "body14";
    p.target = "pascal6";
    //            bkg head torso lua rua lla rla lh rh lul rul lll rll lf rf
    p.mapping = {0,  1,   2,    3,  3,  4,  4,  4, 4, 5,  5,  6,  6,  6, 6};
    return p;
}

TaxonomyProjection identity_projection(const PartTaxonomy& taxonomy) {
    TaxonomyProjection p;
    p.source = taxonomy.name;
    p.target = taxonomy.name;
    p.mapping.resize(taxonomy.classes.size());
    for (size_t i = 0; i < p.mapping.size(); ++i) p.mapping[i] = static_cast<int>(i);
    return p;
}

LabelMap project_parts(const LabelMap& labels, const TaxonomyProjection& projection) {
    LabelMap out(labels.h, labels.w);
    const size_t n = labels.v.size();
    for (size_t i = 0; i < n; ++i) {
        uint8_t src = labels.v[i];
        if (src >= projection.mapping.size())
            throw std::out_of_range("project_parts: label " + std::to_string(src) +
                                    " outside source taxonomy (" +
                                    std::to_string(projection.mapping.size()) + " classes)");
        out.v[i] = static_cast<uint8_t>(projection.mapping[src]);
    }
    return out;
}

std::string to_json(const SkeletonSpec& spec) {
    json j;
    j["name"] = spec.name;
    j["keypoints"] = spec.keypoints;
    j["limbs"] = json::array();
    for (auto [a, b] : spec.limbs) j["limbs"].push_back({a, b});
    return j.dump(2);
}

std::string to_json(const PartTaxonomy& taxonomy) {
    json j;
    j["name"] = taxonomy.name;
    j["classes"] = taxonomy.classes;
    return j.dump(2);
}

std::string to_json(const TaxonomyProjection& projection) {
    json j;
    j["source"] = projection.source;
    j["target"] = projection.target;
    j["mapping"] = projection.mapping;
    return j.dump(2);
}

SkeletonSpec skeleton_from_json(const std::string& text) {
    json j = json::parse(text);
    SkeletonSpec s;
    s.name = j.at("name").get<std::string>();
    s.keypoints = j.at("keypoints").get<std::vector<std::string>>();
    for (const auto& limb : j.at("limbs"))
        s.limbs.emplace_back(limb.at(0).get<int>(), limb.at(1).get<int>());
    validate(s);
    return s;
}

PartTaxonomy taxonomy_from_json(const std::string& text) {
    json j = json::parse(text);
    PartTaxonomy t;
    t.name = j.at("name").get<std::string>();
    t.classes = j.at("classes").get<std::vector<std::string>>();
    validate(t);
    return t;
}

TaxonomyProjection projection_from_json(const std::string& text) {
    json j = json::parse(text);
    TaxonomyProjection p;
    p.source = j.at("source").get<std::string>();
    p.target = j.at("target").get<std::string>();
    p.mapping = j.at("mapping").get<std::vector<int>>();
    return p;
}

}  // namespace cdcl
