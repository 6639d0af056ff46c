#include "cdcl/config.hpp"

#include <stdexcept>

namespace cdcl {

using nlohmann::json;

SkeletonSpec skeleton_by_name(const std::string& name) {
    if (name == "coco17") return standard_skeleton();
    if (name == "fine30") return novel_skeleton();
    throw std::invalid_argument("unknown skeleton: " + name);
}

PartTaxonomy taxonomy_by_name(const std::string& name) {
    if (name == "body14") return body_part_taxonomy();
    if (name == "pascal6") return pascal_part_taxonomy();
    throw std::invalid_argument("unknown taxonomy: " + name);
}

std::string to_string(Reduction r) { return r == Reduction::sum ? "sum" : "mean"; }

Reduction reduction_from_string(const std::string& s) {
    if (s == "sum") return Reduction::sum;
    if (s == "mean") return Reduction::mean;
    throw std::invalid_argument("unknown reduction: " + s);
}

json scene_to_json(const SceneConfig& c) {
    return json{{"height", c.height},
                {"width", c.width},
                {"min_persons", c.min_persons},
                {"max_persons", c.max_persons},
                {"model_pool_size", c.model_pool_size},
                {"appearance", to_string(c.appearance)},
                {"background", to_string(c.background)},
                {"background_pool", c.background_pool},
                {"seed", c.seed},
                {"skeleton", c.skeleton},
                {"min_separation", c.min_separation},
                {"margin", c.margin},
                {"keep_person_masks", c.keep_person_masks}};
}

SceneConfig scene_from_json(const json& j) {
    SceneConfig c;
    c.height = j.at("height").get<int>();
    c.width = j.at("width").get<int>();
    c.min_persons = j.at("min_persons").get<int>();
    c.max_persons = j.at("max_persons").get<int>();
    c.model_pool_size = j.at("model_pool_size").get<int>();
    c.appearance = appearance_from_string(j.at("appearance").get<std::string>());
    c.background = background_from_string(j.at("background").get<std::string>());
    c.background_pool = j.at("background_pool").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.skeleton = j.at("skeleton").get<std::string>();
    c.min_separation = j.at("min_separation").get<float>();
    c.margin = j.at("margin").get<float>();
    c.keep_person_masks = j.at("keep_person_masks").get<bool>();
    return c;
}

json weights_to_json(const LossWeights& w) {
    return json{{"alpha", w.alpha},
                {"beta", w.beta},
                {"gamma", w.gamma},
                {"reduction", to_string(w.reduction)}};
}

LossWeights weights_from_json(const json& j) {
    LossWeights w;
    w.alpha = j.at("alpha").get<double>();
    w.beta = j.at("beta").get<double>();
    w.gamma = j.at("gamma").get<double>();
    w.reduction = reduction_from_string(j.at("reduction").get<std::string>());
    return w;
}

json decode_to_json(const DecodeOptions& o) {
    return json{{"peak_threshold", o.peak_threshold},
                {"min_limb_score", o.min_limb_score},
                {"paf_samples", o.paf_samples},
                {"scales", o.scales}};
}

DecodeOptions decode_from_json(const json& j) {
    DecodeOptions o;
    o.peak_threshold = j.at("peak_threshold").get<float>();
    o.min_limb_score = j.at("min_limb_score").get<float>();
    o.paf_samples = j.at("paf_samples").get<int>();
    o.scales = j.at("scales").get<std::vector<float>>();
    return o;
}

json model_to_json(const net::ModelConfig& c) {
    return json{{"backbone_depth", net::to_string(c.backbone_depth)},
                {"feature_channels", c.feature_channels},
                {"output_stride", c.output_stride},
                {"skeleton", c.spec.name},
                {"taxonomy", c.taxonomy.name},
                {"extra_skeleton", c.extra_spec ? json(c.extra_spec->name) : json()},
                {"init_seed", c.init_seed},
                {"backbone_weights", c.backbone_weights}};
}

net::ModelConfig model_from_json(const json& j) {
    net::ModelConfig c;
    c.backbone_depth = net::preset_from_string(j.at("backbone_depth").get<std::string>());
    c.feature_channels = j.at("feature_channels").get<int>();
    c.output_stride = j.at("output_stride").get<int>();
    c.spec = skeleton_by_name(j.at("skeleton").get<std::string>());
    c.taxonomy = taxonomy_by_name(j.at("taxonomy").get<std::string>());
    if (!j.at("extra_skeleton").is_null())
        c.extra_spec = skeleton_by_name(j.at("extra_skeleton").get<std::string>());
    c.init_seed = j.at("init_seed").get<uint64_t>();
    c.backbone_weights = j.at("backbone_weights").get<std::string>();
    return c;
}

json train_to_json(const TrainConfig& c) {
    return json{{"configuration", to_string(c.configuration)},
                {"weights", weights_to_json(c.weights)},
                {"batch_size", c.batch_size},
                {"lr", c.lr},
                {"steps", c.steps},
                {"seed", c.seed},
                {"model", model_to_json(c.model)},
                {"real_manifest", c.real_manifest},
                {"syn_manifest", c.syn_manifest},
                {"eval_manifest", c.eval_manifest},
                {"sigma", c.sigma},
                {"limb_width", c.limb_width},
                {"checkpoint_every", c.checkpoint_every},
                {"eval_protocol", c.eval_protocol},
                {"eval_include_background", c.eval_include_background},
                {"decode", decode_to_json(c.decode)}};
}

TrainConfig train_from_json(const json& j) {
    TrainConfig c;
    c.configuration = train_mode_from_string(j.at("configuration").get<std::string>());
    c.weights = weights_from_json(j.at("weights"));
    c.batch_size = j.at("batch_size").get<int>();
    c.lr = j.at("lr").get<double>();
    c.steps = j.at("steps").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.model = model_from_json(j.at("model"));
    c.real_manifest = j.at("real_manifest").get<std::string>();
    c.syn_manifest = j.at("syn_manifest").get<std::string>();
    c.eval_manifest = j.at("eval_manifest").get<std::string>();
    c.sigma = j.at("sigma").get<float>();
    c.limb_width = j.at("limb_width").get<float>();
    c.checkpoint_every = j.at("checkpoint_every").get<int>();
    c.eval_protocol = j.at("eval_protocol").get<std::string>();
    c.eval_include_background = j.at("eval_include_background").get<bool>();
    c.decode = decode_from_json(j.at("decode"));
    return c;
}

json ablation_to_json(const AblationConfig& c) {
    json configurations = json::array();
    for (TrainMode m : c.configurations) configurations.push_back(to_string(m));
    json appearances = json::array();
    for (Appearance a : c.appearances) appearances.push_back(to_string(a));
    return json{{"shared", train_to_json(c.shared)},
                {"scene", scene_to_json(c.scene)},
                {"syn_count", c.syn_count},
                {"real_count", c.real_count},
                {"eval_count", c.eval_count},
                {"seeds", c.seeds},
                {"axes", c.axes},
                {"configurations", configurations},
                {"appearances", appearances},
                {"model_pools", c.model_pools},
                {"background_pools", c.background_pools}};
}

AblationConfig ablation_from_json(const json& j) {
    AblationConfig c;
    c.shared = train_from_json(j.at("shared"));
    c.scene = scene_from_json(j.at("scene"));
    c.syn_count = j.at("syn_count").get<int>();
    c.real_count = j.at("real_count").get<int>();
    c.eval_count = j.at("eval_count").get<int>();
    c.seeds = j.at("seeds").get<std::vector<uint64_t>>();
    c.axes = j.at("axes").get<std::vector<std::string>>();
    c.configurations.clear();
    for (const json& m : j.at("configurations"))
        c.configurations.push_back(train_mode_from_string(m.get<std::string>()));
    c.appearances.clear();
    for (const json& a : j.at("appearances"))
        c.appearances.push_back(appearance_from_string(a.get<std::string>()));
    c.model_pools = j.at("model_pools").get<std::vector<int>>();
    c.background_pools = j.at("background_pools").get<std::vector<int>>();
    return c;
}

namespace {

TrainConfig default_train_config() {
    TrainConfig c;
    c.model.spec = standard_skeleton();
    c.model.taxonomy = body_part_taxonomy();
    return c;
}

}  // namespace

json default_tree(const std::string& command) {
    if (command == "gen-data")
        return json{{"scene", scene_to_json({})}, {"count", 16}, {"domain", "synthetic"}};
    if (command == "train") return train_to_json(default_train_config());
    if (command == "eval")
        return json{{"checkpoint", ""},
                    {"manifest", ""},
                    {"protocol", "pascal6"},
                    {"include_background", true},
                    {"decode", decode_to_json({})}};
    if (command == "infer")
        return json{{"checkpoint", ""}, {"image", ""}, {"decode", decode_to_json({})}};
    if (command == "sweep")
        return json{{"train", train_to_json(default_train_config())},
                    {"beta_values", json::array({1.0})},
                    {"gamma_values", json::array({0.5})}};
    if (command == "ablate") {
        AblationConfig a;
        a.shared = default_train_config();
        return ablation_to_json(a);
    }
    throw std::invalid_argument("unknown command: " + command);
}

namespace {

bool assignable(const json& current, const json& next) {
    if (current.is_null()) return true;
    if (current.is_number() && next.is_number()) return true;
    return current.type() == next.type();
}

}  // namespace

void merge_config(json& base, const json& overlay, const std::string& path) {
    if (!overlay.is_object())
        throw std::invalid_argument("config: expected an object at " +
                                    (path.empty() ? std::string("the top level") : path));
    for (const auto& [key, value] : overlay.items()) {
        std::string here = path.empty() ? key : path + "." + key;
        if (!base.contains(key)) throw std::invalid_argument("config: unknown key: " + here);
        json& slot = base[key];
        if (slot.is_object() && value.is_object()) {
            merge_config(slot, value, here);
        } else if (assignable(slot, value)) {
            slot = value;
        } else {
            throw std::invalid_argument("config: type mismatch at " + here);
        }
    }
}

void apply_override(json& tree, const std::string& assignment) {
    size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override must look like key.path=value: " + assignment);
    std::string path = assignment.substr(0, eq);
    std::string text = assignment.substr(eq + 1);

    json* cur = &tree;
    size_t start = 0;
    while (true) {
        size_t dot = path.find('.', start);
        std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) throw std::invalid_argument("override has an empty path segment: " + path);
        if (!cur->is_object() || !cur->contains(key))
            throw std::invalid_argument("override path not in config: " + path);
        cur = &(*cur)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (cur->is_object())
        throw std::invalid_argument("override cannot replace a config section: " + path);

    json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = text;  // plain string
    if (value.is_object())
        throw std::invalid_argument("override value cannot be an object: " + assignment);
    if (!assignable(*cur, value))
        throw std::invalid_argument("override type mismatch at " + path);
    *cur = value;
}

json resolve_config(const std::string& command, const std::string& file_text,
                    const std::vector<std::string>& overrides) {
    json tree = default_tree(command);
    if (!file_text.empty()) {
        json file = json::parse(file_text, nullptr, /*allow_exceptions=*/false);
        if (file.is_discarded())
            throw std::invalid_argument("config file is not valid JSON");
        merge_config(tree, file);
    }
    for (const std::string& o : overrides) apply_override(tree, o);
    return tree;
}

}  // namespace cdcl
