#include "cdcl/targets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cdcl/png_io.hpp"
#include "cdcl/tensor.hpp"

namespace cdcl {

std::vector<float> keypoint_confidence_maps(const std::vector<PersonAnnotation>& persons,
                                            const SkeletonSpec& spec, float sigma,
                                            int h, int w) {
    if (sigma <= 0.f) throw std::invalid_argument("keypoint_confidence_maps: sigma must be > 0");
    const int J = spec.joint_count();
    std::vector<float> K(static_cast<size_t>(J) * h * w, 0.f);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (const auto& person : persons) {
        if (static_cast<int>(person.keypoints.size()) != J)
            throw std::invalid_argument("keypoint_confidence_maps: keypoint list length != J");
        for (int j = 0; j < J; ++j) {
            const Keypoint& kp = person.keypoints[j];
            if (!kp.labeled) continue;
            float* map = K.data() + static_cast<size_t>(j) * h * w;
            for (int y = 0; y < h; ++y) {
                double dy = y - kp.y;
                for (int x = 0; x < w; ++x) {
                    double dx = x - kp.x;
                    float g = static_cast<float>(std::exp(-(dx * dx + dy * dy) * inv));
                    float& cell = map[static_cast<size_t>(y) * w + x];
                    cell = std::max(cell, g);
                }
            }
        }
    }
    return K;
}

std::vector<float> paf_maps(const std::vector<PersonAnnotation>& persons,
                            const SkeletonSpec& spec, float limb_width, int h, int w,
                            int* degenerate_limbs) {
    if (limb_width <= 0.f) throw std::invalid_argument("paf_maps: limb_width must be > 0");
    const int C = spec.limb_count();
    std::vector<float> P(static_cast<size_t>(2 * C) * h * w, 0.f);
    std::vector<int> counts(static_cast<size_t>(C) * h * w, 0);
    int degenerate = 0;

    for (const auto& person : persons) {
        for (int c = 0; c < C; ++c) {
            auto [ja, jb] = spec.limbs[c];
            const Keypoint& a = person.keypoints[ja];
            const Keypoint& b = person.keypoints[jb];
            if (!a.labeled || !b.labeled) continue;
            double ux = b.x - a.x, uy = b.y - a.y;
            double len = std::sqrt(ux * ux + uy * uy);
            if (len < 1e-9) {
                ++degenerate;
                continue;
            }
            ux /= len;
            uy /= len;
            int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - limb_width)));
            int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + limb_width)));
            int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - limb_width)));
            int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + limb_width)));
            float* px = P.data() + static_cast<size_t>(2 * c) * h * w;
            float* py = P.data() + static_cast<size_t>(2 * c + 1) * h * w;
            int* cnt = counts.data() + static_cast<size_t>(c) * h * w;
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    double rx = x - a.x, ry = y - a.y;
                    double along = rx * ux + ry * uy;
                    double across = std::abs(rx * uy - ry * ux);
                    if (along < 0.0 || along > len || across > limb_width) continue;
                    size_t i = static_cast<size_t>(y) * w + x;
                    px[i] += static_cast<float>(ux);
                    py[i] += static_cast<float>(uy);
                    ++cnt[i];
                }
            }
        }
    }
    // Overlapping same-type limbs store the mean of contributing unit vectors.
    for (int c = 0; c < C; ++c) {
        float* px = P.data() + static_cast<size_t>(2 * c) * h * w;
        float* py = P.data() + static_cast<size_t>(2 * c + 1) * h * w;
        const int* cnt = counts.data() + static_cast<size_t>(c) * h * w;
        for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i) {
            if (cnt[i] > 1) {
                px[i] /= cnt[i];
                py[i] /= cnt[i];
            }
        }
    }
    if (degenerate_limbs) *degenerate_limbs = degenerate;
    return P;
}

std::vector<uint8_t> part_label_maps(const LabelMap& part_region,
                                     const PartTaxonomy& taxonomy, int h, int w) {
    for (uint8_t label : part_region.v)
        if (label >= taxonomy.class_count())
            throw std::out_of_range("part_label_maps: label " + std::to_string(label) +
                                    " invalid for taxonomy " + taxonomy.name);
    return resize_nearest(part_region, h, w).v;
}

std::vector<uint8_t> visibility_mask(const AnnotatedSample& sample, int h, int w) {
    std::vector<uint8_t> M(static_cast<size_t>(h) * w, 1);
    if (sample.domain == Domain::synthetic || sample.ignore_regions.empty()) return M;
    double sx = sample.image.w > 0 ? static_cast<double>(sample.image.w) / w : 1.0;
    double sy = sample.image.h > 0 ? static_cast<double>(sample.image.h) / h : 1.0;
    for (int y = 0; y < h; ++y) {
        float iy = static_cast<float>((y + 0.5) * sy - 0.5);
        for (int x = 0; x < w; ++x) {
            float ix = static_cast<float>((x + 0.5) * sx - 0.5);
            for (const IgnoreRect& r : sample.ignore_regions) {
                if (r.contains(ix, iy)) {
                    M[static_cast<size_t>(y) * w + x] = 0;
                    break;
                }
            }
        }
    }
    return M;
}

TargetBundle make_targets(const AnnotatedSample& sample, const SkeletonSpec& spec,
                          const PartTaxonomy& taxonomy, int stride, float sigma,
                          float limb_width) {
    if (stride < 1) throw std::invalid_argument("make_targets: stride must be >= 1");
    TargetBundle t;
    t.J = spec.joint_count();
    t.C = spec.limb_count();
    t.Z = taxonomy.part_count();
    t.h = (sample.image.h + stride - 1) / stride;
    t.w = (sample.image.w + stride - 1) / stride;

    // Image pixel -> output grid coordinate (grid point o sits at image
    // pixel o*stride + (stride-1)/2).
    const float off = (stride - 1) * 0.5f;
    std::vector<PersonAnnotation> scaled(sample.persons.size());
    for (size_t i = 0; i < sample.persons.size(); ++i) {
        scaled[i].keypoints.reserve(sample.persons[i].keypoints.size());
        for (const Keypoint& kp : sample.persons[i].keypoints)
            scaled[i].keypoints.push_back({(kp.x - off) / stride, (kp.y - off) / stride, kp.labeled});
    }

    t.K = keypoint_confidence_maps(scaled, spec, sigma, t.h, t.w);
    t.P = paf_maps(scaled, spec, limb_width, t.h, t.w);
    t.M = visibility_mask(sample, t.h, t.w);
    if (sample.parts.has_value()) {
        t.B = part_label_maps(*sample.parts, taxonomy, t.h, t.w);
        t.has_parts = true;
    }
    return t;
}

void dump_targets(const TargetBundle& bundle, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json index;
    index["shape"] = {bundle.h, bundle.w};
    index["J"] = bundle.J;
    index["C"] = bundle.C;
    index["Z"] = bundle.Z;

    auto dump_channel = [&](const float* p, const std::string& name, float lo, float hi) {
        ImageU8 img(bundle.h, bundle.w, 1);
        for (int y = 0; y < bundle.h; ++y)
            for (int x = 0; x < bundle.w; ++x) {
                float f = (p[static_cast<size_t>(y) * bundle.w + x] - lo) / (hi - lo);
                img.at(y, x, 0) = static_cast<uint8_t>(std::clamp(f, 0.f, 1.f) * 255.f + 0.5f);
            }
        write_png_gray(dir + "/" + name, img);
        return name;
    };

    for (int j = 0; j < bundle.J; ++j)
        index["K"].push_back(dump_channel(bundle.K.data() + static_cast<size_t>(j) * bundle.h * bundle.w,
                                          "K" + std::to_string(j) + ".png", 0.f, 1.f));
    for (int c = 0; c < 2 * bundle.C; ++c)
        index["P"].push_back(dump_channel(bundle.P.data() + static_cast<size_t>(c) * bundle.h * bundle.w,
                                          "P" + std::to_string(c) + ".png", -1.f, 1.f));
    {
        ImageU8 m(bundle.h, bundle.w, 1);
        for (size_t i = 0; i < bundle.M.size(); ++i) m.v[i] = bundle.M[i] ? 255 : 0;
        write_png_gray(dir + "/M.png", m);
        index["M"] = "M.png";
    }
    if (bundle.has_parts) {
        LabelMap b(bundle.h, bundle.w);
        b.v = bundle.B;
        write_png_indexed(dir + "/B.png", b);
        index["B"] = "B.png";
    }
    std::ofstream out(dir + "/index.json");
    out << index.dump(2) << "\n";
}

}  // namespace cdcl
