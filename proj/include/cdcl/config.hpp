#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "cdcl/ablation.hpp"

namespace cdcl {

// Registry names accepted in config files ("coco17"/"fine30",
// "body14"/"pascal6"). Unknown names are rejected.
SkeletonSpec skeleton_by_name(const std::string& name);
PartTaxonomy taxonomy_by_name(const std::string& name);

std::string to_string(Reduction r);
Reduction reduction_from_string(const std::string& s);

// Struct <-> JSON mirrors, field for field. from_json expects a fully
// populated tree (resolve_config guarantees one).
nlohmann::json scene_to_json(const SceneConfig& c);
SceneConfig scene_from_json(const nlohmann::json& j);
nlohmann::json weights_to_json(const LossWeights& w);
LossWeights weights_from_json(const nlohmann::json& j);
nlohmann::json decode_to_json(const DecodeOptions& o);
DecodeOptions decode_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const net::ModelConfig& c);
net::ModelConfig model_from_json(const nlohmann::json& j);
nlohmann::json train_to_json(const TrainConfig& c);
TrainConfig train_from_json(const nlohmann::json& j);
nlohmann::json ablation_to_json(const AblationConfig& c);
AblationConfig ablation_from_json(const nlohmann::json& j);

// Fully populated default tree for one CLI command (gen-data, train, eval,
// infer, sweep, ablate).
nlohmann::json default_tree(const std::string& command);

// Overlays onto base, recursing through objects. Keys missing from base and
// type changes (other than between numbers, or from null) are rejected.
void merge_config(nlohmann::json& base, const nlohmann::json& overlay,
                  const std::string& path = "");

// Applies one "dotted.path=value" assignment. The path must already exist
// and must not name an object. Values parse as JSON, falling back to a
// plain string.
void apply_override(nlohmann::json& tree, const std::string& assignment);

// defaults <- config file (optional) <- overrides, in that order.
nlohmann::json resolve_config(const std::string& command, const std::string& file_text,
                              const std::vector<std::string>& overrides);

}  // namespace cdcl
