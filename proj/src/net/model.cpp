#include "cdcl/net/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cdcl/net/ops.hpp"
#include "cdcl/rng.hpp"

namespace cdcl::net {

using nlohmann::json;

std::string to_string(BackbonePreset p) {
    switch (p) {
        case BackbonePreset::tiny: return "tiny";
        case BackbonePreset::small: return "small";
        case BackbonePreset::paper: return "paper";
    }
    throw std::logic_error("unreachable");
}

BackbonePreset preset_from_string(const std::string& s) {
    if (s == "tiny") return BackbonePreset::tiny;
    if (s == "small") return BackbonePreset::small;
    if (s == "paper") return BackbonePreset::paper;
    throw std::invalid_argument("unknown backbone preset '" + s + "'");
}

void validate(const ModelConfig& c) {
    if (c.feature_channels < 8)
        throw std::invalid_argument("ModelConfig: feature_channels must be >= 8");
    if (c.output_stride < 1 || (c.output_stride & (c.output_stride - 1)) != 0)
        throw std::invalid_argument("ModelConfig: output_stride must be a power of two");
    validate(c.spec);
    validate(c.taxonomy);
    if (c.extra_spec) validate(*c.extra_spec);
}

namespace {

struct TrunkPlan {
    std::vector<int> depths;
    std::vector<int> channels;
};

TrunkPlan trunk_plan(BackbonePreset p) {
    switch (p) {
        case BackbonePreset::tiny: return {{1, 1, 1, 1}, {16, 24, 32, 48}};
        case BackbonePreset::small: return {{2, 2, 2, 2}, {24, 32, 48, 64}};
        case BackbonePreset::paper: return {{3, 4, 6, 3}, {32, 48, 64, 96}};
    }
    throw std::logic_error("unreachable");
}

constexpr int kHeadDepth = 8;

int add_param(Model& m, const std::string& name, std::vector<int> shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    m.params.push_back({name, std::move(shape), std::vector<float>(n, 0.f),
                        std::vector<float>(n, 0.f)});
    return static_cast<int>(m.params.size() - 1);
}

ConvSpec make_conv(Model& m, const std::string& name, int in_c, int out_c, int k, int stride,
                   bool act) {
    ConvSpec c;
    c.in_c = in_c;
    c.out_c = out_c;
    c.k = k;
    c.stride = stride;
    c.pad = k / 2;
    c.act = act;
    c.wi = add_param(m, name + ".w", {out_c, in_c, k, k});
    c.bi = add_param(m, name + ".b", {out_c});
    return c;
}

// He-normal weights; projection layers get a small fixed std so untrained
// outputs start near zero.
void init_conv(Model& m, const ConvSpec& c, Rng& rng, bool projection) {
    Param& w = m.params[c.wi];
    double std_dev = projection ? 0.01 : std::sqrt(2.0 / (c.in_c * c.k * c.k));
    for (float& x : w.w) x = static_cast<float>(rng.normal() * std_dev);
}

Head make_head(Model& m, const std::string& name, int feature_channels, int out_channels,
               Rng& rng) {
    Head h;
    h.name = name;
    h.out_channels = out_channels;
    for (int i = 0; i < kHeadDepth; ++i) {
        h.layers.push_back(make_conv(m, "head." + name + "." + std::to_string(i),
                                     feature_channels, feature_channels, 3, 1, true));
        init_conv(m, h.layers.back(), rng, false);
    }
    h.layers.push_back(make_conv(m, "head." + name + ".proj", feature_channels, out_channels, 1,
                                 1, false));
    init_conv(m, h.layers.back(), rng, true);
    return h;
}

void append_extra_heads(Model& m, const SkeletonSpec& novel) {
    validate(novel);
    Rng rng(splitmix64(m.config.init_seed ^ 0x5eadf00dULL));
    m.heads.push_back(make_head(m, "kpt2", m.config.feature_channels, novel.joint_count(), rng));
    m.heads.push_back(make_head(m, "paf2", m.config.feature_channels, 2 * novel.limb_count(), rng));
}

void load_trunk_weights(Model& m, const std::string& path);

}  // namespace

Model build_model(const ModelConfig& config) {
    validate(config);
    Model m;
    m.config = config;
    Rng rng(config.init_seed);

    TrunkPlan plan = trunk_plan(config.backbone_depth);
    int in_c = 3;
    int li = 0;
    for (size_t s = 0; s < plan.depths.size(); ++s) {
        for (int d = 0; d < plan.depths[s]; ++d) {
            int stride = d == 0 ? 2 : 1;
            m.trunk.push_back(make_conv(m, "trunk." + std::to_string(li), in_c,
                                        plan.channels[s], 3, stride, true));
            init_conv(m, m.trunk.back(), rng, false);
            in_c = plan.channels[s];
            ++li;
        }
        m.taps.push_back(li - 1);
    }

    int concat_c = 0;
    for (int ch : plan.channels) concat_c += ch;
    m.mix = make_conv(m, "mix", concat_c, config.feature_channels, 1, 1, true);
    init_conv(m, m.mix, rng, false);

    const SkeletonSpec& sk = config.spec;
    m.heads.push_back(make_head(m, "kpt", config.feature_channels, sk.joint_count(), rng));
    m.heads.push_back(make_head(m, "paf", config.feature_channels, 2 * sk.limb_count(), rng));
    m.heads.push_back(make_head(m, "part", config.feature_channels,
                                config.taxonomy.class_count(), rng));

    if (config.extra_spec) append_extra_heads(m, *config.extra_spec);
    if (!config.backbone_weights.empty()) load_trunk_weights(m, config.backbone_weights);
    return m;
}

namespace {

Tensor run_conv(const Model& m, const ConvSpec& c, const Tensor& x, std::vector<float>& buf) {
    if (x.c != c.in_c) throw std::invalid_argument("conv: channel mismatch");
    Tensor y(c.out_c, conv_out_dim(x.h, c.k, c.stride, c.pad),
             conv_out_dim(x.w, c.k, c.stride, c.pad));
    conv2d(x.v.data(), x.c, x.h, x.w, m.params[c.wi].w.data(), m.params[c.bi].w.data(), c.out_c,
           c.k, c.stride, c.pad, y.v.data(), buf);
    if (c.act) leaky_relu(y.v.data(), y.size(), 0.1f);
    return y;
}

const Tensor* find_head_output(const std::vector<Head>& heads,
                               const std::vector<Tensor>& finals, const std::string& name) {
    for (size_t i = 0; i < heads.size(); ++i)
        if (heads[i].name == name) return &finals[i];
    return nullptr;
}

}  // namespace

ModelOutput forward(const Model& m, const ImageU8& image, Activations* acts) {
    if (image.c != 3) throw std::invalid_argument("forward: expected a 3-channel RGB image");
    return forward(m, to_tensor(image), acts);
}

ModelOutput forward(const Model& m, const Tensor& input, Activations* acts) {
    if (input.c != 3 || input.h <= 0 || input.w <= 0)
        throw std::invalid_argument("forward: expected a non-empty 3-channel input");
    if (input.h < m.config.output_stride || input.w < m.config.output_stride)
        throw std::invalid_argument("forward: input smaller than one output cell");

    std::vector<float> buf;
    std::vector<Tensor> trunk_outs;
    trunk_outs.reserve(m.trunk.size());
    const Tensor* x = &input;
    for (const ConvSpec& c : m.trunk) {
        trunk_outs.push_back(run_conv(m, c, *x, buf));
        x = &trunk_outs.back();
    }

    const int gh = (input.h + m.config.output_stride - 1) / m.config.output_stride;
    const int gw = (input.w + m.config.output_stride - 1) / m.config.output_stride;
    std::vector<Tensor> pyramid;
    pyramid.reserve(m.taps.size());
    int concat_c = 0;
    for (int t : m.taps) {
        pyramid.push_back(resize_bilinear(trunk_outs[t], gh, gw));
        concat_c += pyramid.back().c;
    }
    Tensor concat(concat_c, gh, gw);
    {
        float* dst = concat.v.data();
        for (const Tensor& p : pyramid) {
            std::memcpy(dst, p.v.data(), p.size() * sizeof(float));
            dst += p.size();
        }
    }
    Tensor fused = run_conv(m, m.mix, concat, buf);

    std::vector<std::vector<Tensor>> head_outs(m.heads.size());
    std::vector<Tensor> finals(m.heads.size());
    for (size_t hi = 0; hi < m.heads.size(); ++hi) {
        const Tensor* hx = &fused;
        for (const ConvSpec& c : m.heads[hi].layers) {
            head_outs[hi].push_back(run_conv(m, c, *hx, buf));
            hx = &head_outs[hi].back();
        }
        finals[hi] = head_outs[hi].back();
    }

    ModelOutput out;
    out.K_hat = *find_head_output(m.heads, finals, "kpt");
    out.P_hat = *find_head_output(m.heads, finals, "paf");
    out.B_hat = *find_head_output(m.heads, finals, "part");
    if (const Tensor* t = find_head_output(m.heads, finals, "kpt2")) out.K2_hat = *t;
    if (const Tensor* t = find_head_output(m.heads, finals, "paf2")) out.P2_hat = *t;

    if (acts) {
        acts->input = input;
        acts->trunk_outs = std::move(trunk_outs);
        acts->pyramid = std::move(pyramid);
        acts->fused = std::move(fused);
        acts->head_outs = std::move(head_outs);
    }
    return out;
}

namespace {

// Backward through one conv given its input activation and output gradient;
// returns the input gradient (or empty when not requested).
Tensor conv_backward_step(Model& m, const ConvSpec& c, const Tensor& in, const Tensor& out,
                          Tensor d_out, bool need_input_grad, std::vector<float>& buf) {
    if (c.act) leaky_relu_backward(out.v.data(), d_out.v.data(), d_out.size(), 0.1f);
    Tensor d_in;
    if (need_input_grad) d_in = Tensor(in.c, in.h, in.w);
    conv2d_backward(in.v.data(), in.c, in.h, in.w, m.params[c.wi].w.data(), c.out_c, c.k,
                    c.stride, c.pad, d_out.v.data(), m.params[c.wi].g.data(),
                    m.params[c.bi].g.data(), need_input_grad ? d_in.v.data() : nullptr, buf);
    return d_in;
}

void accumulate(Tensor& dst, const Tensor& src) {
    if (dst.empty()) {
        dst = src;
        return;
    }
    for (size_t i = 0; i < dst.size(); ++i) dst.v[i] += src.v[i];
}

}  // namespace

void backward(Model& m, const Activations& acts, const OutputGrads& grads) {
    std::vector<float> buf;
    Tensor d_fused;

    for (size_t hi = 0; hi < m.heads.size(); ++hi) {
        const Head& head = m.heads[hi];
        const Tensor* g = nullptr;
        if (head.name == "kpt") g = &grads.dK;
        else if (head.name == "paf") g = &grads.dP;
        else if (head.name == "part") g = &grads.dB;
        else if (head.name == "kpt2") g = grads.dK2 ? &*grads.dK2 : nullptr;
        else if (head.name == "paf2") g = grads.dP2 ? &*grads.dP2 : nullptr;
        if (!g || g->empty()) continue;
        if (!g->same_shape(acts.head_outs[hi].back()))
            throw std::invalid_argument("backward: gradient shape mismatch for head " + head.name);

        Tensor d = *g;
        for (int li = static_cast<int>(head.layers.size()) - 1; li >= 0; --li) {
            const Tensor& in = li == 0 ? acts.fused : acts.head_outs[hi][li - 1];
            d = conv_backward_step(m, head.layers[li], in, acts.head_outs[hi][li], std::move(d),
                                   true, buf);
        }
        accumulate(d_fused, d);
    }
    if (d_fused.empty()) return;

    // Re-assemble the concat input of the mix layer from the stored pyramid.
    int concat_c = 0;
    for (const Tensor& p : acts.pyramid) concat_c += p.c;
    Tensor concat(concat_c, acts.fused.h, acts.fused.w);
    {
        float* dst = concat.v.data();
        for (const Tensor& p : acts.pyramid) {
            std::memcpy(dst, p.v.data(), p.size() * sizeof(float));
            dst += p.size();
        }
    }
    Tensor d_concat = conv_backward_step(m, m.mix, concat, acts.fused, std::move(d_fused), true, buf);

    std::vector<Tensor> d_trunk(m.trunk.size());
    size_t offset = 0;
    for (size_t ti = 0; ti < m.taps.size(); ++ti) {
        const Tensor& p = acts.pyramid[ti];
        Tensor slice(p.c, p.h, p.w);
        std::memcpy(slice.v.data(), d_concat.v.data() + offset, slice.size() * sizeof(float));
        offset += slice.size();
        const Tensor& src = acts.trunk_outs[m.taps[ti]];
        Tensor d_src(src.c, src.h, src.w);
        resize_bilinear_backward(slice, src.h, src.w, d_src);
        accumulate(d_trunk[m.taps[ti]], d_src);
    }

    for (int li = static_cast<int>(m.trunk.size()) - 1; li >= 0; --li) {
        if (d_trunk[li].empty()) continue;
        const Tensor& in = li == 0 ? acts.input : acts.trunk_outs[li - 1];
        Tensor d_in = conv_backward_step(m, m.trunk[li], in, acts.trunk_outs[li],
                                         std::move(d_trunk[li]), li > 0, buf);
        if (li > 0) accumulate(d_trunk[li - 1], d_in);
    }
}

void zero_grad(Model& m) {
    for (Param& p : m.params) std::fill(p.g.begin(), p.g.end(), 0.f);
}

void extend_heads(Model& m, const SkeletonSpec& novel) {
    if (m.heads.size() != 3)
        throw std::invalid_argument("extend_heads: model already carries extra heads");
    append_extra_heads(m, novel);
    m.config.extra_spec = novel;
}

size_t parameter_count(const Model& m) {
    size_t n = 0;
    for (const Param& p : m.params) n += p.count();
    return n;
}

size_t head_parameter_count(const Model& m, const std::string& head_name) {
    for (const Head& h : m.heads)
        if (h.name == head_name) {
            size_t n = 0;
            for (const ConvSpec& c : h.layers) n += m.params[c.wi].count() + m.params[c.bi].count();
            return n;
        }
    throw std::invalid_argument("unknown head '" + head_name + "'");
}

namespace {

constexpr char kMagic[8] = {'C', 'D', 'C', 'L', 'C', 'K', 'P', '1'};

json config_to_json(const ModelConfig& c) {
    json j;
    j["backbone_depth"] = to_string(c.backbone_depth);
    j["feature_channels"] = c.feature_channels;
    j["output_stride"] = c.output_stride;
    j["init_seed"] = c.init_seed;
    j["spec"] = json::parse(to_json(c.spec));
    j["taxonomy"] = json::parse(to_json(c.taxonomy));
    j["extra_spec"] = c.extra_spec ? json::parse(to_json(*c.extra_spec)) : json();
    return j;
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.backbone_depth = preset_from_string(j.at("backbone_depth").get<std::string>());
    c.feature_channels = j.at("feature_channels").get<int>();
    c.output_stride = j.at("output_stride").get<int>();
    c.init_seed = j.at("init_seed").get<uint64_t>();
    c.spec = skeleton_from_json(j.at("spec").dump());
    c.taxonomy = taxonomy_from_json(j.at("taxonomy").dump());
    if (!j.at("extra_spec").is_null())
        c.extra_spec = skeleton_from_json(j.at("extra_spec").dump());
    return c;
}

void load_trunk_weights(Model& m, const std::string& path) {
    Model donor = load_checkpoint(path);
    for (Param& p : m.params) {
        if (p.name.rfind("trunk.", 0) != 0 && p.name.rfind("mix.", 0) != 0) continue;
        bool found = false;
        for (const Param& q : donor.params)
            if (q.name == p.name) {
                if (q.shape != p.shape)
                    throw std::runtime_error("backbone weights: shape mismatch for " + p.name);
                p.w = q.w;
                found = true;
                break;
            }
        if (!found)
            throw std::runtime_error("backbone weights: missing parameter " + p.name);
    }
}

}  // namespace

void save_checkpoint(const Model& m, const std::string& path) {
    json header;
    header["version"] = 1;
    header["config"] = config_to_json(m.config);
    json plist = json::array();
    for (const Param& p : m.params) plist.push_back({{"name", p.name}, {"shape", p.shape}});
    header["params"] = plist;
    std::string htext = header.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    f.write(kMagic, 8);
    uint64_t hlen = htext.size();
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const Param& p : m.params)
        f.write(reinterpret_cast<const char*>(p.w.data()),
                static_cast<std::streamsize>(p.w.size() * sizeof(float)));
    if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 8);
    if (!f || hlen == 0 || hlen > (1u << 26))
        throw std::runtime_error("corrupt checkpoint header: " + path);
    std::string htext(hlen, '\0');
    f.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!f) throw std::runtime_error("corrupt checkpoint header: " + path);
    json header = json::parse(htext);
    if (header.at("version").get<int>() != 1)
        throw std::runtime_error("unsupported checkpoint version");

    ModelConfig config = config_from_json(header.at("config"));
    Model m = build_model(config);

    const json& plist = header.at("params");
    if (plist.size() != m.params.size())
        throw std::runtime_error("checkpoint parameter list does not match architecture");
    for (size_t i = 0; i < m.params.size(); ++i) {
        Param& p = m.params[i];
        if (plist[i].at("name").get<std::string>() != p.name ||
            plist[i].at("shape").get<std::vector<int>>() != p.shape)
            throw std::runtime_error("checkpoint parameter mismatch at " + p.name);
        f.read(reinterpret_cast<char*>(p.w.data()),
               static_cast<std::streamsize>(p.w.size() * sizeof(float)));
        if (!f) throw std::runtime_error("checkpoint truncated at " + p.name);
    }
    char extra;
    if (f.read(&extra, 1)) throw std::runtime_error("checkpoint has trailing bytes: " + path);
    return m;
}

Model load_checkpoint_checked(const std::string& path, const SkeletonSpec& spec,
                              const PartTaxonomy& taxonomy) {
    Model m = load_checkpoint(path);
    if (!(m.config.spec == spec))
        throw std::runtime_error("checkpoint skeleton '" + m.config.spec.name +
                                 "' does not match expected '" + spec.name + "'");
    if (!(m.config.taxonomy == taxonomy))
        throw std::runtime_error("checkpoint taxonomy '" + m.config.taxonomy.name +
                                 "' does not match expected '" + taxonomy.name + "'");
    return m;
}

}  // namespace cdcl::net
