#include "cdcl/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace cdcl {

void validate(const DecodeOptions& o) {
    if (!(o.peak_threshold > 0.f && o.peak_threshold < 1.f))
        throw std::invalid_argument("decode: peak_threshold must be in (0,1)");
    if (o.paf_samples < 2) throw std::invalid_argument("decode: paf_samples must be >= 2");
    if (o.scales.empty()) throw std::invalid_argument("decode: scales must be non-empty");
    for (float s : o.scales)
        if (!(s > 0.f)) throw std::invalid_argument("decode: scales must be positive");
}

Tensor multiscale_part_scores(const net::Model& model, const ImageU8& image,
                              const std::vector<float>& scales) {
    if (scales.empty()) throw std::invalid_argument("multiscale_part_scores: no scales");
    if (image.c != 3 || image.h <= 0 || image.w <= 0)
        throw std::invalid_argument("multiscale_part_scores: need a non-empty RGB image");
    const int stride = model.config.output_stride;
    Tensor base = to_tensor(image);
    Tensor acc;
    bool any = false;
    for (float s : scales) {
        if (!(s > 0.f)) throw std::invalid_argument("multiscale_part_scores: scale <= 0");
        int sh = std::max(1, static_cast<int>(std::lround(image.h * s)));
        int sw = std::max(1, static_cast<int>(std::lround(image.w * s)));
        if (sh < stride || sw < stride) {
            std::fprintf(stderr, "multiscale_part_scores: skipping scale %g (%dx%d < stride %d)\n",
                         s, sh, sw, stride);
            continue;
        }
        Tensor in = resize_bilinear(base, sh, sw);
        ModelOutput out = net::forward(model, in);
        // Per-pixel softmax over classes.
        Tensor prob(out.B_hat.c, out.B_hat.h, out.B_hat.w);
        const size_t plane = out.B_hat.plane();
        for (size_t i = 0; i < plane; ++i) {
            float mx = out.B_hat.v[i];
            for (int z = 1; z < out.B_hat.c; ++z)
                mx = std::max(mx, out.B_hat.v[z * plane + i]);
            float sum = 0;
            for (int z = 0; z < out.B_hat.c; ++z) {
                float e = std::exp(out.B_hat.v[z * plane + i] - mx);
                prob.v[z * plane + i] = e;
                sum += e;
            }
            for (int z = 0; z < out.B_hat.c; ++z) prob.v[z * plane + i] /= sum;
        }
        Tensor up = resize_bilinear(prob, image.h, image.w);
        if (!any) {
            acc = std::move(up);
            any = true;
        } else {
            for (size_t i = 0; i < acc.size(); ++i) acc.v[i] = std::max(acc.v[i], up.v[i]);
        }
    }
    if (!any)
        throw std::invalid_argument("multiscale_part_scores: every scale was below the stride");
    return acc;
}

LabelMap part_segmentation(const Tensor& scores) {
    LabelMap out(scores.h, scores.w);
    const size_t plane = scores.plane();
    for (size_t i = 0; i < plane; ++i) {
        int best = 0;
        float bv = scores.v[i];
        if (!std::isfinite(bv)) throw std::invalid_argument("part_segmentation: non-finite score");
        for (int z = 1; z < scores.c; ++z) {
            float v = scores.v[z * plane + i];
            if (!std::isfinite(v))
                throw std::invalid_argument("part_segmentation: non-finite score");
            if (v > bv) {
                bv = v;
                best = z;
            }
        }
        out.v[i] = static_cast<uint8_t>(best);
    }
    return out;
}

namespace {

// One-axis log-parabola refinement around a sampled peak. Exact for
// Gaussian-shaped peaks; skipped at borders or non-positive neighbors.
float parabola_offset(float vm, float v0, float vp) {
    if (!(vm > 0.f && v0 > 0.f && vp > 0.f)) return 0.f;
    double lm = std::log(vm), l0 = std::log(v0), lp = std::log(vp);
    double denom = lm - 2.0 * l0 + lp;
    if (!(denom < -1e-12)) return 0.f;
    double off = 0.5 * (lm - lp) / denom;
    return static_cast<float>(std::clamp(off, -0.5, 0.5));
}

}  // namespace

std::vector<KeypointCandidate> keypoint_peaks(const Tensor& K_hat, float threshold,
                                              const SkeletonSpec& spec, int stride) {
    if (K_hat.c != spec.joint_count())
        throw std::invalid_argument("keypoint_peaks: channel count does not match skeleton");
    if (!(threshold > 0.f && threshold < 1.f))
        throw std::invalid_argument("keypoint_peaks: threshold must be in (0,1)");
    const int h = K_hat.h, w = K_hat.w;
    const float half = (stride - 1) * 0.5f;
    std::vector<KeypointCandidate> out;
    for (int j = 0; j < K_hat.c; ++j) {
        const float* m = K_hat.ch(j);
        std::vector<KeypointCandidate> typed;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                float v = m[y * w + x];
                if (!(v > threshold)) continue;
                if (x > 0 && m[y * w + x - 1] >= v) continue;
                if (x + 1 < w && m[y * w + x + 1] >= v) continue;
                if (y > 0 && m[(y - 1) * w + x] >= v) continue;
                if (y + 1 < h && m[(y + 1) * w + x] >= v) continue;
                float ox = (x > 0 && x + 1 < w)
                               ? parabola_offset(m[y * w + x - 1], v, m[y * w + x + 1])
                               : 0.f;
                float oy = (y > 0 && y + 1 < h)
                               ? parabola_offset(m[(y - 1) * w + x], v, m[(y + 1) * w + x])
                               : 0.f;
                KeypointCandidate c;
                c.type = j;
                c.x = (x + ox) * stride + half;
                c.y = (y + oy) * stride + half;
                c.score = std::min(v, 1.f);
                typed.push_back(c);
            }
        std::stable_sort(typed.begin(), typed.end(),
                         [](const KeypointCandidate& a, const KeypointCandidate& b) {
                             return a.score > b.score;
                         });
        out.insert(out.end(), typed.begin(), typed.end());
    }
    for (size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
    return out;
}

float limb_score(const Tensor& P_hat, const KeypointCandidate& a, const KeypointCandidate& b,
                 int limb_index, int n_samples, int stride) {
    if (n_samples < 2) throw std::invalid_argument("limb_score: n_samples must be >= 2");
    if (2 * limb_index + 1 >= P_hat.c) throw std::invalid_argument("limb_score: limb out of range");
    float dx = b.x - a.x, dy = b.y - a.y;
    float len = std::hypot(dx, dy);
    if (len == 0.f) return 0.f;
    float ux = dx / len, uy = dy / len;
    const float half = (stride - 1) * 0.5f;
    const float* px = P_hat.ch(2 * limb_index);
    const float* py = P_hat.ch(2 * limb_index + 1);
    double acc = 0;
    for (int k = 0; k < n_samples; ++k) {
        float t = static_cast<float>(k) / static_cast<float>(n_samples - 1);
        float ix = a.x + t * dx, iy = a.y + t * dy;
        int gx = std::clamp(static_cast<int>(std::lround((ix - half) / stride)), 0, P_hat.w - 1);
        int gy = std::clamp(static_cast<int>(std::lround((iy - half) / stride)), 0, P_hat.h - 1);
        acc += px[gy * P_hat.w + gx] * ux + py[gy * P_hat.w + gx] * uy;
    }
    return static_cast<float>(acc / n_samples);
}

namespace {

struct WorkingSkeleton {
    std::vector<int> joint_cand;                    // candidate id per type, -1 empty
    std::vector<std::pair<int, float>> limbs_used;
    bool dead = false;
};

}  // namespace

std::vector<PersonSkeleton> greedy_assemble(const std::vector<KeypointCandidate>& candidates,
                                            const Tensor& P_hat, const SkeletonSpec& spec,
                                            float min_limb_score, int paf_samples, int stride) {
    const int J = spec.joint_count();
    for (const KeypointCandidate& c : candidates)
        if (c.type < 0 || c.type >= J)
            throw std::invalid_argument("greedy_assemble: candidate type outside skeleton");

    std::vector<std::vector<int>> by_type(J);  // indices into candidates
    for (size_t i = 0; i < candidates.size(); ++i)
        by_type[candidates[i].type].push_back(static_cast<int>(i));

    std::vector<WorkingSkeleton> skeletons;
    // candidate id -> index into skeletons (-1 unassigned)
    std::vector<int> owner;
    owner.reserve(candidates.size());
    int max_id = -1;
    for (const KeypointCandidate& c : candidates) max_id = std::max(max_id, c.id);
    owner.assign(static_cast<size_t>(max_id + 1), -1);

    struct ScoredPair {
        float score;
        int ai, bi;  // indices into candidates
    };
    for (int li = 0; li < spec.limb_count(); ++li) {
        auto [src, dst] = spec.limbs[li];
        std::vector<ScoredPair> pairs;
        for (int ai : by_type[src])
            for (int bi : by_type[dst])
                pairs.push_back({limb_score(P_hat, candidates[ai], candidates[bi], li,
                                            paf_samples, stride),
                                 ai, bi});
        std::sort(pairs.begin(), pairs.end(), [&](const ScoredPair& a, const ScoredPair& b) {
            if (a.score != b.score) return a.score > b.score;
            if (candidates[a.ai].id != candidates[b.ai].id)
                return candidates[a.ai].id < candidates[b.ai].id;
            return candidates[a.bi].id < candidates[b.bi].id;
        });
        std::vector<char> used_src(candidates.size(), 0), used_dst(candidates.size(), 0);
        for (const ScoredPair& p : pairs) {
            if (p.score < min_limb_score) break;
            if (used_src[p.ai] || used_dst[p.bi]) continue;
            const KeypointCandidate& a = candidates[p.ai];
            const KeypointCandidate& b = candidates[p.bi];
            int sa = owner[a.id], sb = owner[b.id];
            if (sa < 0 && sb < 0) {
                WorkingSkeleton ws;
                ws.joint_cand.assign(J, -1);
                ws.joint_cand[src] = a.id;
                ws.joint_cand[dst] = b.id;
                ws.limbs_used.push_back({li, p.score});
                owner[a.id] = static_cast<int>(skeletons.size());
                owner[b.id] = static_cast<int>(skeletons.size());
                skeletons.push_back(std::move(ws));
            } else if (sa >= 0 && sb < 0) {
                WorkingSkeleton& ws = skeletons[sa];
                if (ws.joint_cand[dst] != -1) continue;  // slot conflict
                ws.joint_cand[dst] = b.id;
                ws.limbs_used.push_back({li, p.score});
                owner[b.id] = sa;
            } else if (sa < 0 && sb >= 0) {
                WorkingSkeleton& ws = skeletons[sb];
                if (ws.joint_cand[src] != -1) continue;
                ws.joint_cand[src] = a.id;
                ws.limbs_used.push_back({li, p.score});
                owner[a.id] = sb;
            } else if (sa == sb) {
                skeletons[sa].limbs_used.push_back({li, p.score});
            } else {
                // Merge two partial groups when their joint slots are disjoint.
                WorkingSkeleton& wa = skeletons[sa];
                WorkingSkeleton& wb = skeletons[sb];
                bool disjoint = true;
                for (int j = 0; j < J; ++j)
                    if (wa.joint_cand[j] != -1 && wb.joint_cand[j] != -1) {
                        disjoint = false;
                        break;
                    }
                if (!disjoint) continue;
                for (int j = 0; j < J; ++j)
                    if (wb.joint_cand[j] != -1) {
                        wa.joint_cand[j] = wb.joint_cand[j];
                        owner[wb.joint_cand[j]] = sa;
                    }
                wa.limbs_used.insert(wa.limbs_used.end(), wb.limbs_used.begin(),
                                     wb.limbs_used.end());
                wa.limbs_used.push_back({li, p.score});
                wb.dead = true;
            }
            used_src[p.ai] = 1;
            used_dst[p.bi] = 1;
        }
    }

    std::vector<int> cand_by_id(static_cast<size_t>(max_id + 1), -1);
    for (size_t i = 0; i < candidates.size(); ++i) cand_by_id[candidates[i].id] = static_cast<int>(i);

    std::vector<PersonSkeleton> out;
    for (const WorkingSkeleton& ws : skeletons) {
        if (ws.dead || ws.limbs_used.empty()) continue;
        PersonSkeleton ps;
        ps.joints.resize(J);
        for (int j = 0; j < J; ++j) {
            if (ws.joint_cand[j] < 0) continue;
            const KeypointCandidate& c = candidates[cand_by_id[ws.joint_cand[j]]];
            ps.joints[j] = {true, c.x, c.y, c.score, c.id};
            ps.total_score += c.score;
        }
        ps.limbs_used = ws.limbs_used;
        for (auto [li, sc] : ws.limbs_used) ps.total_score += sc;
        out.push_back(std::move(ps));
    }
    return out;
}

InferResult infer(const net::Model& model, const ImageU8& image, const DecodeOptions& options) {
    validate(options);
    InferResult res;
    Tensor scores = multiscale_part_scores(model, image, options.scales);
    res.labels = part_segmentation(scores);

    ModelOutput out = net::forward(model, image);
    const int stride = model.config.output_stride;
    std::vector<KeypointCandidate> cands =
        keypoint_peaks(out.K_hat, options.peak_threshold, model.config.spec, stride);
    res.skeletons = greedy_assemble(cands, out.P_hat, model.config.spec, options.min_limb_score,
                                    options.paf_samples, stride);
    if (out.K2_hat && model.config.extra_spec) {
        std::vector<KeypointCandidate> cands2 =
            keypoint_peaks(*out.K2_hat, options.peak_threshold, *model.config.extra_spec, stride);
        res.novel_skeletons = greedy_assemble(cands2, *out.P2_hat, *model.config.extra_spec,
                                              options.min_limb_score, options.paf_samples, stride);
    }
    return res;
}

}  // namespace cdcl
