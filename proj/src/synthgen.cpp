#include "cdcl/synthgen.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cdcl/png_io.hpp"

namespace cdcl {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Appearance a) {
    switch (a) {
        case Appearance::original: return "original";
        case Appearance::no_background: return "no_background";
        case Appearance::grayscale: return "grayscale";
        case Appearance::binary_mask: return "binary_mask";
    }
    throw std::logic_error("unreachable");
}

Appearance appearance_from_string(const std::string& s) {
    if (s == "original") return Appearance::original;
    if (s == "no_background") return Appearance::no_background;
    if (s == "grayscale") return Appearance::grayscale;
    if (s == "binary_mask") return Appearance::binary_mask;
    throw std::invalid_argument("unknown appearance '" + s + "'");
}

std::string to_string(BackgroundKind b) {
    return b == BackgroundKind::blank_room ? "blank_room" : "composite";
}

BackgroundKind background_from_string(const std::string& s) {
    if (s == "blank_room") return BackgroundKind::blank_room;
    if (s == "composite") return BackgroundKind::composite;
    throw std::invalid_argument("unknown background '" + s + "'");
}

void validate(const SceneConfig& c) {
    if (c.height < 16 || c.width < 16)
        throw std::invalid_argument("scene: image must be at least 16x16");
    if (c.min_persons < 1 || c.min_persons > c.max_persons)
        throw std::invalid_argument("scene: need 1 <= min_persons <= max_persons");
    if (c.model_pool_size < 1) throw std::invalid_argument("scene: model_pool_size >= 1");
    if (c.background_pool < 1) throw std::invalid_argument("scene: background_pool >= 1");
    if (c.skeleton != "coco17" && c.skeleton != "fine30")
        throw std::invalid_argument("scene: unknown skeleton '" + c.skeleton + "'");
    if (c.min_separation < 0 || c.margin < 0)
        throw std::invalid_argument("scene: negative separation or margin");
    if (2 * c.margin + 8 >= static_cast<float>(std::min(c.height, c.width)))
        throw std::invalid_argument("scene: margin leaves no room for a person");
}

namespace {

std::atomic<uint64_t> g_retry_overflows{0};

struct Vec2 {
    float x = 0, y = 0;
};
Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator*(Vec2 a, float s) { return {a.x * s, a.y * s}; }
Vec2 rot(Vec2 v, float a) {
    float c = std::cos(a), s = std::sin(a);
    return {v.x * c - v.y * s, v.x * s + v.y * c};
}

// Capsule when a != b, disc when a == b.
struct Shape {
    Vec2 a, b;
    float r = 1;
    int cls = 0;
};

struct Avatar {
    std::array<Vec2, 30> kp;  // fine30 order; [0,17) is the coco17 set
    std::vector<Shape> shapes;
};

struct Style {
    std::array<std::array<uint8_t, 3>, 15> palette;  // index 0 unused
    float len_mult = 1, width_mult = 1, head_mult = 1, arm_mult = 1, leg_mult = 1;
};

std::array<uint8_t, 3> hsv_to_rgb(float h, float s, float v) {
    h = h - std::floor(h);
    float r = std::fabs(h * 6.f - 3.f) - 1.f;
    float g = 2.f - std::fabs(h * 6.f - 2.f);
    float b = 2.f - std::fabs(h * 6.f - 4.f);
    auto mix = [&](float c) {
        c = std::clamp(c, 0.f, 1.f);
        return static_cast<uint8_t>(std::lround(255.f * v * (1.f + s * (c - 1.f))));
    };
    return {mix(r), mix(g), mix(b)};
}

// Styles are global assets: the same id yields the same avatar look in
// every scene, so a pool of 1 collapses shape/color diversity.
Style make_style(int id) {
    Rng rng(splitmix64(0x5717e000ULL ^ (static_cast<uint64_t>(id) * 0x9e3779b97f4a7c15ULL)));
    Style s;
    float base_hue = static_cast<float>(rng.uniform());
    for (int cls = 1; cls <= 14; ++cls) {
        float hue = base_hue + 0.61803f * static_cast<float>(cls) / 14.f +
                    static_cast<float>(rng.uniform(-0.04, 0.04));
        float sat = static_cast<float>(rng.uniform(0.55, 0.95));
        float val = static_cast<float>(rng.uniform(0.45, 0.85));
        s.palette[cls] = hsv_to_rgb(hue, sat, val);
    }
    s.len_mult = static_cast<float>(rng.uniform(0.9, 1.1));
    s.width_mult = static_cast<float>(rng.uniform(0.85, 1.2));
    s.head_mult = static_cast<float>(rng.uniform(0.85, 1.15));
    s.arm_mult = static_cast<float>(rng.uniform(0.9, 1.1));
    s.leg_mult = static_cast<float>(rng.uniform(0.9, 1.1));
    return s;
}

// Joint-angle prior constants, in radians and units of torso length L.
// Arms stay >= 0.3 rad out from the body axis so hands never bury the hip
// keypoints; knees bend backward only.
constexpr float kLeanRange = 0.20f;
constexpr float kHeadTiltRange = 0.20f;
constexpr float kShoulderHalf = 0.26f, kHipHalf = 0.20f;
constexpr float kTorsoR = 0.24f, kHeadOffset = 0.45f, kHeadR = 0.26f;
constexpr float kUpperArm = 0.42f, kLowerArm = 0.40f, kArmR = 0.10f, kHandR = 0.14f;
constexpr float kUpperLeg = 0.50f, kLowerLeg = 0.48f;
constexpr float kLegR = 0.13f, kLowLegR = 0.11f;
constexpr float kFootLen = 0.28f, kFootR = 0.10f;

enum Kp {
    kNose, kLEye, kREye, kLEar, kREar, kLSho, kRSho, kLElb, kRElb, kLWri, kRWri,
    kLHip, kRHip, kLKnee, kRKnee, kLAnk, kRAnk, kNeck,
    kLThumb, kLIndex, kLPinky, kRThumb, kRIndex, kRPinky,
    kLBigToe, kLSmallToe, kLHeel, kRBigToe, kRSmallToe, kRHeel
};

Avatar sample_avatar(float L, const Style& st, Rng& rng) {
    Avatar av;
    auto U = [&](double lo, double hi) { return static_cast<float>(rng.uniform(lo, hi)); };

    L *= st.len_mult;
    const float wm = st.width_mult, hm = st.head_mult, am = st.arm_mult, lm = st.leg_mult;
    float lean = U(-kLeanRange, kLeanRange);
    Vec2 up = rot({0, -1}, lean);
    Vec2 pp = rot(up, 3.14159265f / 2);  // screen-right; carries the "left" side
    Vec2 down = up * -1.f;

    Vec2 hipC{0, 0};
    Vec2 shC = hipC + up * L;
    av.kp[kLSho] = shC + pp * (kShoulderHalf * L * wm);
    av.kp[kRSho] = shC - pp * (kShoulderHalf * L * wm);
    av.kp[kLHip] = hipC + pp * (kHipHalf * L * wm);
    av.kp[kRHip] = hipC - pp * (kHipHalf * L * wm);
    av.kp[kNeck] = shC;

    Vec2 u2 = rot(up, U(-kHeadTiltRange, kHeadTiltRange));
    Vec2 pp2 = rot(u2, 3.14159265f / 2);
    Vec2 headC = shC + u2 * (kHeadOffset * L * hm);
    float headR = kHeadR * L * hm;
    av.kp[kNose] = headC - u2 * (0.08f * L * hm);
    av.kp[kLEye] = headC + u2 * (0.06f * L * hm) + pp2 * (0.10f * L * hm);
    av.kp[kREye] = headC + u2 * (0.06f * L * hm) - pp2 * (0.10f * L * hm);
    av.kp[kLEar] = headC + pp2 * (0.20f * L * hm);
    av.kp[kREar] = headC - pp2 * (0.20f * L * hm);

    float handR = kHandR * L * wm;
    for (int side = 0; side < 2; ++side) {
        float sign = side == 0 ? 1.f : -1.f;
        int sho = side == 0 ? kLSho : kRSho, elb = side == 0 ? kLElb : kRElb;
        int wri = side == 0 ? kLWri : kRWri;
        int thumb = side == 0 ? kLThumb : kRThumb, index = side == 0 ? kLIndex : kRIndex;
        int pinky = side == 0 ? kLPinky : kRPinky;
        Vec2 dirU = rot(down, sign * U(0.30, 1.00));
        av.kp[elb] = av.kp[sho] + dirU * (kUpperArm * L * am);
        Vec2 dirL = rot(dirU, sign * U(-0.20, 1.20));
        av.kp[wri] = av.kp[elb] + dirL * (kLowerArm * L * am);
        Vec2 handC = av.kp[wri] + dirL * (0.5f * handR);
        av.kp[thumb] = handC + rot(dirL, sign * 1.1f) * (0.7f * handR);
        av.kp[index] = handC + dirL * (0.8f * handR);
        av.kp[pinky] = handC + rot(dirL, -sign * 0.9f) * (0.7f * handR);
    }

    for (int side = 0; side < 2; ++side) {
        float sign = side == 0 ? 1.f : -1.f;
        int hip = side == 0 ? kLHip : kRHip, knee = side == 0 ? kLKnee : kRKnee;
        int ank = side == 0 ? kLAnk : kRAnk;
        int bt = side == 0 ? kLBigToe : kRBigToe, stoe = side == 0 ? kLSmallToe : kRSmallToe;
        int heel = side == 0 ? kLHeel : kRHeel;
        Vec2 dirU = rot(down, sign * U(0.06, 0.45));
        av.kp[knee] = av.kp[hip] + dirU * (kUpperLeg * L * lm);
        Vec2 dirL = rot(dirU, -sign * U(0.0, 0.70));
        av.kp[ank] = av.kp[knee] + dirL * (kLowerLeg * L * lm);
        Vec2 fd = rot(pp * sign, U(-0.25, 0.25));
        av.kp[bt] = av.kp[ank] + fd * (kFootLen * L);
        av.kp[stoe] = av.kp[ank] + fd * (0.78f * kFootLen * L);
        av.kp[heel] = av.kp[ank] - fd * (0.07f * L);
    }

    // Draw order: torso, legs, feet, arms, hands, head. Later shapes
    // overwrite earlier ones, which keeps each keypoint on its own class.
    auto cap = [&](Vec2 a, Vec2 b, float r, int cls) { av.shapes.push_back({a, b, r, cls}); };
    cap(hipC, shC, kTorsoR * L * wm, 2);
    cap(av.kp[kLHip], av.kp[kLKnee], kLegR * L * wm, 9);
    cap(av.kp[kRHip], av.kp[kRKnee], kLegR * L * wm, 10);
    cap(av.kp[kLKnee], av.kp[kLAnk], kLowLegR * L * wm, 11);
    cap(av.kp[kRKnee], av.kp[kRAnk], kLowLegR * L * wm, 12);
    cap(av.kp[kLAnk], av.kp[kLBigToe], kFootR * L * wm, 13);
    cap(av.kp[kRAnk], av.kp[kRBigToe], kFootR * L * wm, 14);
    cap(av.kp[kLSho], av.kp[kLElb], kArmR * L * wm, 3);
    cap(av.kp[kRSho], av.kp[kRElb], kArmR * L * wm, 4);
    cap(av.kp[kLElb], av.kp[kLWri], kArmR * L * wm, 5);
    cap(av.kp[kRElb], av.kp[kRWri], kArmR * L * wm, 6);
    {
        Vec2 dl = av.kp[kLWri] - av.kp[kLElb];
        float n = std::hypot(dl.x, dl.y);
        Vec2 hc = av.kp[kLWri] + dl * (n > 0 ? 0.5f * handR / n : 0.f);
        cap(hc, hc, handR, 7);
        Vec2 dr = av.kp[kRWri] - av.kp[kRElb];
        n = std::hypot(dr.x, dr.y);
        hc = av.kp[kRWri] + dr * (n > 0 ? 0.5f * handR / n : 0.f);
        cap(hc, hc, handR, 8);
    }
    cap(headC, headC, headR, 1);
    return av;
}

bool degenerate(const Avatar& av) {
    for (const Vec2& p : av.kp)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) return true;
    // Head below the hips means the angle sampler produced nonsense.
    return av.kp[kNose].y > (av.kp[kLHip].y + av.kp[kRHip].y) * 0.5f;
}

struct Box {
    float x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

Box avatar_box(const Avatar& av) {
    Box b{1e9f, 1e9f, -1e9f, -1e9f};
    auto grow = [&](float x, float y, float r) {
        b.x0 = std::min(b.x0, x - r);
        b.y0 = std::min(b.y0, y - r);
        b.x1 = std::max(b.x1, x + r);
        b.y1 = std::max(b.y1, y + r);
    };
    for (const Vec2& p : av.kp) grow(p.x, p.y, 0);
    for (const Shape& s : av.shapes) {
        grow(s.a.x, s.a.y, s.r);
        grow(s.b.x, s.b.y, s.r);
    }
    return b;
}

void transform(Avatar& av, float scale, Vec2 t) {
    for (Vec2& p : av.kp) p = p * scale + t;
    for (Shape& s : av.shapes) {
        s.a = s.a * scale + t;
        s.b = s.b * scale + t;
        s.r *= scale;
    }
}

float box_gap(const Box& a, const Box& b) {
    float dx = std::max({0.f, a.x0 - b.x1, b.x0 - a.x1});
    float dy = std::max({0.f, a.y0 - b.y1, b.y0 - a.y1});
    return std::hypot(dx, dy);
}

float dist2_point_segment(float px, float py, Vec2 a, Vec2 b) {
    float vx = b.x - a.x, vy = b.y - a.y;
    float len2 = vx * vx + vy * vy;
    float t = 0;
    if (len2 > 0) t = std::clamp(((px - a.x) * vx + (py - a.y) * vy) / len2, 0.f, 1.f);
    float dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
    return dx * dx + dy * dy;
}

void paint_shape(ImageU8& img, LabelMap& labels, LabelMap* person, const Shape& s,
                 const std::array<uint8_t, 3>& color) {
    int x0 = std::max(0, static_cast<int>(std::floor(std::min(s.a.x, s.b.x) - s.r)));
    int x1 = std::min(img.w - 1, static_cast<int>(std::ceil(std::max(s.a.x, s.b.x) + s.r)));
    int y0 = std::max(0, static_cast<int>(std::floor(std::min(s.a.y, s.b.y) - s.r)));
    int y1 = std::min(img.h - 1, static_cast<int>(std::ceil(std::max(s.a.y, s.b.y) + s.r)));
    float r2 = s.r * s.r;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            if (dist2_point_segment(static_cast<float>(x), static_cast<float>(y), s.a, s.b) > r2)
                continue;
            img.at(y, x, 0) = color[0];
            img.at(y, x, 1) = color[1];
            img.at(y, x, 2) = color[2];
            labels.at(y, x) = static_cast<uint8_t>(s.cls);
            if (person) person->at(y, x) = static_cast<uint8_t>(s.cls);
        }
}

float hash01(uint64_t t, int x, int y) {
    uint64_t h = splitmix64(t ^ (static_cast<uint64_t>(static_cast<uint32_t>(y)) * 0x100000001b3ULL +
                                 static_cast<uint64_t>(static_cast<uint32_t>(x))));
    return static_cast<float>(h >> 40) * (1.f / 16777216.f);
}

void fill_blank_room(ImageU8& img, Rng& rng) {
    int b = 232 + static_cast<int>(rng.uniform_int(16));
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            img.at(y, x, 0) = static_cast<uint8_t>(b);
            img.at(y, x, 1) = static_cast<uint8_t>(b - 2);
            img.at(y, x, 2) = static_cast<uint8_t>(b - 4);
        }
}

// Procedural texture: two sinusoid fields plus hash noise, fully determined
// by the texture id so a pool of n ids = n distinct backgrounds.
void fill_texture(ImageU8& img, int texture_id) {
    Rng tr(splitmix64(0xb06d00bULL ^ (static_cast<uint64_t>(texture_id) * 0x9e3779b97f4a7c15ULL)));
    float base[3], amp[3], phase[3], amp2[3], phase2[3];
    for (int c = 0; c < 3; ++c) {
        base[c] = static_cast<float>(tr.uniform(50, 200));
        amp[c] = static_cast<float>(tr.uniform(12, 45));
        phase[c] = static_cast<float>(tr.uniform(0, 6.2831853));
        amp2[c] = static_cast<float>(tr.uniform(6, 25));
        phase2[c] = static_cast<float>(tr.uniform(0, 6.2831853));
    }
    float fx = static_cast<float>(tr.uniform(0.05, 0.45));
    float fy = static_cast<float>(tr.uniform(0.05, 0.45));
    float gx = static_cast<float>(tr.uniform(0.05, 0.60));
    float gy = static_cast<float>(tr.uniform(0.05, 0.60));
    float noise_amp = static_cast<float>(tr.uniform(4, 18));
    uint64_t nid = static_cast<uint64_t>(texture_id) * 0x2545f4914f6cdd1dULL;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            float n = (hash01(nid, x, y) - 0.5f) * 2.f * noise_amp;
            for (int c = 0; c < 3; ++c) {
                float v = base[c] + amp[c] * std::sin(fx * x + fy * y + phase[c]) +
                          amp2[c] * std::sin(gx * x - gy * y + phase2[c]) + n;
                img.at(y, x, c) = static_cast<uint8_t>(std::clamp(v, 0.f, 255.f));
            }
        }
}

struct PlacedPerson {
    Avatar avatar;
    int style_id = 0;
};

// Shared scene construction: background, persons, paint. Appearance and
// photometric post-processing differ between the two public generators.
std::vector<PlacedPerson> place_persons(const SceneConfig& c, Rng& rng) {
    int n = c.min_persons + static_cast<int>(rng.uniform_int(
                                static_cast<uint32_t>(c.max_persons - c.min_persons + 1)));
    const float avail_w = static_cast<float>(c.width - 1) - 2 * c.margin;
    const float avail_h = static_cast<float>(c.height - 1) - 2 * c.margin;
    std::vector<PlacedPerson> placed;
    std::vector<Box> boxes;
    for (int i = 0; i < n; ++i) {
        int style_id = static_cast<int>(rng.uniform_int(static_cast<uint32_t>(c.model_pool_size)));
        Style style = make_style(style_id);
        bool ok = false;
        Avatar chosen;
        for (int pose_try = 0; pose_try < 8 && !ok; ++pose_try) {
            float L = static_cast<float>(rng.uniform(0.30, 0.42)) * std::min(c.height, c.width);
            Avatar av = sample_avatar(L, style, rng);
            if (degenerate(av)) continue;
            Box b = avatar_box(av);
            float bw = b.x1 - b.x0, bh = b.y1 - b.y0;
            float scale = std::min({1.f, avail_w / bw, avail_h / bh});
            transform(av, scale, {0, 0});
            b = avatar_box(av);
            bw = b.x1 - b.x0;
            bh = b.y1 - b.y0;
            for (int place_try = 0; place_try < 40; ++place_try) {
                float tx = c.margin - b.x0 + static_cast<float>(rng.uniform(0, avail_w - bw));
                float ty = c.margin - b.y0 + static_cast<float>(rng.uniform(0, avail_h - bh));
                Box bb{b.x0 + tx, b.y0 + ty, b.x1 + tx, b.y1 + ty};
                bool clear = true;
                if (c.min_separation > 0)
                    for (const Box& other : boxes)
                        if (box_gap(bb, other) < c.min_separation) {
                            clear = false;
                            break;
                        }
                if (!clear) continue;
                transform(av, 1.f, {tx, ty});
                chosen = av;
                boxes.push_back(bb);
                ok = true;
                break;
            }
        }
        if (!ok) {
            // Bound exhausted: place the last pose anyway at the center and
            // count the event.
            g_retry_overflows.fetch_add(1, std::memory_order_relaxed);
            float L = static_cast<float>(rng.uniform(0.30, 0.42)) * std::min(c.height, c.width);
            Avatar av = sample_avatar(L, style, rng);
            Box b = avatar_box(av);
            float scale = std::min({1.f, avail_w / (b.x1 - b.x0), avail_h / (b.y1 - b.y0)});
            transform(av, scale, {0, 0});
            b = avatar_box(av);
            transform(av, 1.f,
                      {c.margin - b.x0 + 0.5f * (avail_w - (b.x1 - b.x0)),
                       c.margin - b.y0 + 0.5f * (avail_h - (b.y1 - b.y0))});
            chosen = av;
            boxes.push_back(avatar_box(chosen));
        }
        placed.push_back({std::move(chosen), style_id});
    }
    return placed;
}

AnnotatedSample assemble_scene(const SceneConfig& c, Rng& rng, bool textured_background) {
    validate(c);
    AnnotatedSample s;
    s.image = ImageU8(c.height, c.width, 3);
    s.domain = Domain::synthetic;
    s.skeleton = c.skeleton;
    s.parts = LabelMap(c.height, c.width);

    if (textured_background || c.background == BackgroundKind::composite)
        fill_texture(s.image, static_cast<int>(rng.uniform_int(
                                  static_cast<uint32_t>(c.background_pool))));
    else
        fill_blank_room(s.image, rng);

    std::vector<PlacedPerson> persons = place_persons(c, rng);
    const int J = c.skeleton == "fine30" ? 30 : 17;
    for (const PlacedPerson& p : persons) {
        Style style = make_style(p.style_id);
        PersonAnnotation ann;
        if (c.keep_person_masks) ann.part_region = LabelMap(c.height, c.width);
        for (const Shape& sh : p.avatar.shapes)
            paint_shape(s.image, *s.parts, ann.part_region ? &*ann.part_region : nullptr, sh,
                        style.palette[sh.cls]);
        // Joint caps: a small disc of each keypoint's own class painted last,
        // so the person's crossing limbs cannot bury the class the annotation
        // promises. Contested pixels go to the nearest keypoint of a
        // different class; with radius >= 1.6 the half-disc facing away from
        // any rival always contains a pixel center, so every keypoint keeps
        // an own-class pixel within 2 px even when joints nearly coincide.
        const float cap_r = std::max(1.6f, 0.35f * p.avatar.shapes[0].r);
        const float cr2 = cap_r * cap_r;
        for (int j = 0; j < 30; ++j) {
            const Vec2& kp = p.avatar.kp[j];
            int cls = keypoint_part_class(j);
            const std::array<uint8_t, 3>& color = style.palette[cls];
            int x0 = std::max(0, static_cast<int>(std::floor(kp.x - cap_r)));
            int x1 = std::min(c.width - 1, static_cast<int>(std::ceil(kp.x + cap_r)));
            int y0 = std::max(0, static_cast<int>(std::floor(kp.y - cap_r)));
            int y1 = std::min(c.height - 1, static_cast<int>(std::ceil(kp.y + cap_r)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    float dx = static_cast<float>(x) - kp.x, dy = static_cast<float>(y) - kp.y;
                    float d2 = dx * dx + dy * dy;
                    if (d2 > cr2) continue;
                    bool owned = true;
                    for (int o = 0; o < 30 && owned; ++o) {
                        if (keypoint_part_class(o) == cls) continue;
                        float ox = static_cast<float>(x) - p.avatar.kp[o].x;
                        float oy = static_cast<float>(y) - p.avatar.kp[o].y;
                        float od2 = ox * ox + oy * oy;
                        owned = od2 > d2 || (od2 == d2 && o > j);
                    }
                    if (!owned) continue;
                    s.image.at(y, x, 0) = color[0];
                    s.image.at(y, x, 1) = color[1];
                    s.image.at(y, x, 2) = color[2];
                    s.parts->at(y, x) = static_cast<uint8_t>(cls);
                    if (ann.part_region) ann.part_region->at(y, x) = static_cast<uint8_t>(cls);
                }
        }
        ann.keypoints.resize(J);
        for (int j = 0; j < J; ++j) {
            const Vec2& kp = p.avatar.kp[j];
            bool inside = kp.x >= 0 && kp.x <= static_cast<float>(c.width - 1) && kp.y >= 0 &&
                          kp.y <= static_cast<float>(c.height - 1);
            ann.keypoints[j] = {kp.x, kp.y, inside};
        }
        s.persons.push_back(std::move(ann));
    }
    return s;
}

void apply_appearance(AnnotatedSample& s, Appearance mode) {
    ImageU8& img = s.image;
    const LabelMap& labels = *s.parts;
    switch (mode) {
        case Appearance::original: return;
        case Appearance::no_background:
            for (int y = 0; y < img.h; ++y)
                for (int x = 0; x < img.w; ++x)
                    if (labels.at(y, x) == 0)
                        img.at(y, x, 0) = img.at(y, x, 1) = img.at(y, x, 2) = 0;
            return;
        case Appearance::grayscale:
            for (int y = 0; y < img.h; ++y)
                for (int x = 0; x < img.w; ++x) {
                    float g = 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) +
                              0.114f * img.at(y, x, 2);
                    uint8_t v = static_cast<uint8_t>(std::lround(std::clamp(g, 0.f, 255.f)));
                    img.at(y, x, 0) = img.at(y, x, 1) = img.at(y, x, 2) = v;
                }
            return;
        case Appearance::binary_mask:
            for (int y = 0; y < img.h; ++y)
                for (int x = 0; x < img.w; ++x) {
                    uint8_t v = labels.at(y, x) > 0 ? 255 : 0;
                    img.at(y, x, 0) = img.at(y, x, 1) = img.at(y, x, 2) = v;
                }
            return;
    }
}

}  // namespace

uint64_t placement_retry_overflows() { return g_retry_overflows.load(std::memory_order_relaxed); }

int keypoint_part_class(int keypoint_index) {
    static constexpr int table[30] = {1, 1, 1, 1, 1, 3,  4,  5,  6,  7,  8,  9,  10, 11, 12,
                                      13, 14, 2, 7, 7, 7, 8,  8,  8,  13, 13, 13, 14, 14, 14};
    if (keypoint_index < 0 || keypoint_index >= 30)
        throw std::out_of_range("keypoint_part_class: index outside fine30");
    return table[keypoint_index];
}

AnnotatedSample generate_scene(const SceneConfig& config, Rng& rng) {
    AnnotatedSample s = assemble_scene(config, rng, false);
    apply_appearance(s, config.appearance);
    return s;
}

AnnotatedSample generate_pseudo_real(const SceneConfig& config, Rng& rng) {
    AnnotatedSample s = assemble_scene(config, rng, true);
    s.domain = Domain::real;
    // Photometric jitter over the composited frame.
    float brightness = static_cast<float>(rng.uniform(-20, 20));
    float contrast = static_cast<float>(rng.uniform(0.85, 1.18));
    float cast[3];
    for (float& c : cast) c = static_cast<float>(rng.uniform(-10, 10));
    float sigma = static_cast<float>(rng.uniform(2, 6));
    ImageU8& img = s.image;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            float noise = static_cast<float>(rng.normal()) * sigma;
            for (int c = 0; c < 3; ++c) {
                float v = (static_cast<float>(img.at(y, x, c)) - 128.f) * contrast + 128.f +
                          brightness + cast[c] + noise;
                img.at(y, x, c) = static_cast<uint8_t>(std::clamp(v, 0.f, 255.f));
            }
        }
    return s;
}

namespace {

json sample_annotation_json(const AnnotatedSample& s) {
    json j;
    j["domain"] = to_string(s.domain);
    j["skeleton"] = s.skeleton;
    j["persons"] = json::array();
    for (const PersonAnnotation& p : s.persons) {
        json kps = json::array();
        for (const Keypoint& k : p.keypoints)
            kps.push_back({static_cast<double>(k.x), static_cast<double>(k.y), k.labeled});
        j["persons"].push_back({{"keypoints", kps}});
    }
    j["ignore_regions"] = json::array();
    for (const IgnoreRect& r : s.ignore_regions)
        j["ignore_regions"].push_back({static_cast<double>(r.x), static_cast<double>(r.y),
                                       static_cast<double>(r.w), static_cast<double>(r.h)});
    return j;
}

json scene_config_json(const SceneConfig& c) {
    json j;
    j["height"] = c.height;
    j["width"] = c.width;
    j["min_persons"] = c.min_persons;
    j["max_persons"] = c.max_persons;
    j["model_pool_size"] = c.model_pool_size;
    j["appearance"] = to_string(c.appearance);
    j["background"] = to_string(c.background);
    j["background_pool"] = c.background_pool;
    j["seed"] = c.seed;
    j["skeleton"] = c.skeleton;
    j["min_separation"] = c.min_separation;
    j["margin"] = c.margin;
    return j;
}

}  // namespace

std::string generate_dataset(const SceneConfig& config, int count, Domain domain,
                             const std::string& out_dir) {
    validate(config);
    if (count < 1) throw std::invalid_argument("generate_dataset: count must be >= 1");
    std::vector<fs::path> written;
    auto cleanup = [&]() {
        for (const fs::path& p : written) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    };
    try {
        fs::create_directories(fs::path(out_dir) / "images");
        fs::create_directories(fs::path(out_dir) / "parts");
        fs::create_directories(fs::path(out_dir) / "ann");
        json manifest;
        manifest["version"] = 1;
        manifest["domain"] = to_string(domain);
        manifest["count"] = count;
        manifest["config"] = scene_config_json(config);
        manifest["samples"] = json::array();
        for (int i = 0; i < count; ++i) {
            Rng rng(splitmix64(config.seed ^ (0xd1b54a32d192ed03ULL * (static_cast<uint64_t>(i) + 1))));
            AnnotatedSample s = domain == Domain::synthetic ? generate_scene(config, rng)
                                                            : generate_pseudo_real(config, rng);
            char id[16];
            std::snprintf(id, sizeof(id), "%06d", i);
            fs::path img_rel = fs::path("images") / (std::string(id) + ".png");
            fs::path parts_rel = fs::path("parts") / (std::string(id) + ".png");
            fs::path ann_rel = fs::path("ann") / (std::string(id) + ".json");
            write_png_rgb((fs::path(out_dir) / img_rel).string(), s.image);
            written.push_back(fs::path(out_dir) / img_rel);
            write_png_indexed((fs::path(out_dir) / parts_rel).string(), *s.parts);
            written.push_back(fs::path(out_dir) / parts_rel);
            {
                std::ofstream f(fs::path(out_dir) / ann_rel);
                if (!f) throw std::runtime_error("cannot write " + ann_rel.string());
                f << sample_annotation_json(s).dump(1) << "\n";
                if (!f) throw std::runtime_error("write failed: " + ann_rel.string());
            }
            written.push_back(fs::path(out_dir) / ann_rel);
            manifest["samples"].push_back({{"id", std::string(id)},
                                           {"image", img_rel.generic_string()},
                                           {"parts", parts_rel.generic_string()},
                                           {"ann", ann_rel.generic_string()}});
        }
        fs::path mpath = fs::path(out_dir) / "manifest.json";
        {
            std::ofstream f(mpath);
            if (!f) throw std::runtime_error("cannot write manifest.json");
            f << manifest.dump(1) << "\n";
            if (!f) throw std::runtime_error("manifest write failed");
        }
        written.push_back(mpath);
        return mpath.string();
    } catch (...) {
        cleanup();
        throw;
    }
}

}  // namespace cdcl
