#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "cdcl/decode.hpp"
#include "cdcl/rng.hpp"
#include "cdcl/skeleton.hpp"
#include "cdcl/synthgen.hpp"
#include "cdcl/targets.hpp"
#include "cdcl/tensor.hpp"

using namespace cdcl;

namespace {

SkeletonSpec pair_spec() {
    SkeletonSpec s;
    s.name = "pair";
    s.keypoints = {"a", "b"};
    s.limbs = {{0, 1}};
    return s;
}

// Gaussian bump in grid units; max-combined like the training targets.
void add_gaussian(Tensor& K, int ch, float cx, float cy, float sigma, float peak = 1.f) {
    for (int y = 0; y < K.h; ++y)
        for (int x = 0; x < K.w; ++x) {
            float dx = x - cx, dy = y - cy;
            float v = peak * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
            K.at(ch, y, x) = std::max(K.at(ch, y, x), v);
        }
}

KeypointCandidate cand(int type, float x, float y, float score, int id) {
    KeypointCandidate c;
    c.type = type;
    c.x = x;
    c.y = y;
    c.score = score;
    c.id = id;
    return c;
}

// Max-weight bipartite matching by exhaustive search; rows/cols <= 4.
double best_matching(const std::vector<std::vector<float>>& score, float min_score) {
    int rows = static_cast<int>(score.size());
    int cols = rows ? static_cast<int>(score[0].size()) : 0;
    std::vector<char> used(cols, 0);
    std::function<double(int)> rec = [&](int r) -> double {
        if (r == rows) return 0.0;
        double best = rec(r + 1);
        for (int c = 0; c < cols; ++c) {
            if (used[c] || score[r][c] < min_score) continue;
            used[c] = 1;
            best = std::max(best, score[r][c] + rec(r + 1));
            used[c] = 0;
        }
        return best;
    };
    return rec(0);
}

// Structural soundness of an assembly result against its inputs.
void check_valid(const std::vector<PersonSkeleton>& skeletons,
                 const std::vector<KeypointCandidate>& candidates, const SkeletonSpec& spec,
                 float min_limb_score) {
    std::map<int, const KeypointCandidate*> by_id;
    for (const KeypointCandidate& c : candidates) by_id[c.id] = &c;
    std::set<int> claimed;
    for (const PersonSkeleton& ps : skeletons) {
        REQUIRE(ps.joints.size() == static_cast<size_t>(spec.joint_count()));
        CHECK(!ps.limbs_used.empty());
        int present = 0;
        double score_sum = 0;
        for (int j = 0; j < spec.joint_count(); ++j) {
            const PersonSkeleton::Joint& joint = ps.joints[j];
            if (!joint.present) continue;
            ++present;
            REQUIRE(by_id.count(joint.candidate_id) == 1);
            const KeypointCandidate& c = *by_id[joint.candidate_id];
            CHECK(c.type == j);  // slot holds a candidate of its own type
            CHECK(c.x == joint.x);
            CHECK(c.y == joint.y);
            CHECK(claimed.insert(joint.candidate_id).second);  // used once globally
            score_sum += joint.score;
        }
        CHECK(present >= 2);
        for (auto [li, sc] : ps.limbs_used) {
            REQUIRE(li >= 0);
            REQUIRE(li < spec.limb_count());
            CHECK(sc >= min_limb_score);
            CHECK(ps.joints[spec.limbs[li].first].present);
            CHECK(ps.joints[spec.limbs[li].second].present);
            score_sum += sc;
        }
        CHECK(ps.total_score == doctest::Approx(score_sum).epsilon(1e-5));
    }
}

}  // namespace

TEST_CASE("decode options validation") {
    DecodeOptions o;
    CHECK_NOTHROW(validate(o));
    o.peak_threshold = 0.f;
    CHECK_THROWS_AS(validate(o), std::invalid_argument);
    o = DecodeOptions{};
    o.peak_threshold = 1.f;
    CHECK_THROWS_AS(validate(o), std::invalid_argument);
    o = DecodeOptions{};
    o.paf_samples = 1;
    CHECK_THROWS_AS(validate(o), std::invalid_argument);
    o = DecodeOptions{};
    o.scales.clear();
    CHECK_THROWS_AS(validate(o), std::invalid_argument);
    o = DecodeOptions{};
    o.scales = {0.5f, -1.f};
    CHECK_THROWS_AS(validate(o), std::invalid_argument);

    // documented defaults
    o = DecodeOptions{};
    CHECK(o.peak_threshold == 0.1f);
    CHECK(o.min_limb_score == 0.05f);
    CHECK(o.paf_samples == 10);
    CHECK(o.scales == std::vector<float>{0.5f, 1.0f, 1.5f});
}

TEST_CASE("peaks of sampled gaussians are recovered to subpixel accuracy") {
    SkeletonSpec spec = pair_spec();
    Rng rng(5);
    for (int stride : {1, 4, 8}) {
        for (int trial = 0; trial < 30; ++trial) {
            Tensor K(2, 17, 13);
            float cx0 = static_cast<float>(rng.uniform(2.0, 10.0));
            float cy0 = static_cast<float>(rng.uniform(2.0, 14.0));
            float cx1 = static_cast<float>(rng.uniform(2.0, 10.0));
            float cy1 = static_cast<float>(rng.uniform(2.0, 14.0));
            add_gaussian(K, 0, cx0, cy0, 1.2f);
            add_gaussian(K, 1, cx1, cy1, 1.2f);
            std::vector<KeypointCandidate> got = keypoint_peaks(K, 0.3f, spec, stride);
            REQUIRE(got.size() == 2);
            CHECK(got[0].type == 0);
            CHECK(got[1].type == 1);
            float half = (stride - 1) * 0.5f;
            CHECK(got[0].x == doctest::Approx(cx0 * stride + half).epsilon(1e-4));
            CHECK(got[0].y == doctest::Approx(cy0 * stride + half).epsilon(1e-4));
            CHECK(got[1].x == doctest::Approx(cx1 * stride + half).epsilon(1e-4));
            CHECK(got[1].y == doctest::Approx(cy1 * stride + half).epsilon(1e-4));
            CHECK(got[0].score <= 1.f);
            CHECK(got[0].id == 0);
            CHECK(got[1].id == 1);
        }
    }
}

TEST_CASE("peak detection is strict about neighbors and threshold") {
    SkeletonSpec spec = pair_spec();
    spec.keypoints = {"a"};
    spec.limbs = {};
    // single-joint spec is rejected by validate() but keypoint_peaks only
    // needs the channel count, so build a 1-channel map directly
    SkeletonSpec one;
    one.name = "one";
    one.keypoints = {"a"};
    one.limbs = {};

    Tensor K(1, 5, 5);
    K.at(0, 2, 2) = 0.5f;
    std::vector<KeypointCandidate> got = keypoint_peaks(K, 0.1f, one, 1);
    REQUIRE(got.size() == 1);
    CHECK(got[0].x == 2.f);
    CHECK(got[0].y == 2.f);

    // a plateau of two equal maxima is suppressed entirely
    K.at(0, 2, 3) = 0.5f;
    CHECK(keypoint_peaks(K, 0.1f, one, 1).empty());

    // at or below the threshold nothing fires
    Tensor T(1, 5, 5);
    T.at(0, 2, 2) = 0.1f;
    CHECK(keypoint_peaks(T, 0.1f, one, 1).empty());
    T.at(0, 2, 2) = 0.100001f;
    CHECK(keypoint_peaks(T, 0.1f, one, 1).size() == 1);

    // border peaks are kept, with no refinement across the edge
    Tensor B(1, 4, 4);
    B.at(0, 0, 0) = 0.9f;
    got = keypoint_peaks(B, 0.1f, one, 4);
    REQUIRE(got.size() == 1);
    CHECK(got[0].x == 1.5f);  // grid 0 maps to (stride-1)/2
    CHECK(got[0].y == 1.5f);

    // scores above one are clamped
    Tensor C(1, 5, 5);
    C.at(0, 2, 2) = 1.7f;
    got = keypoint_peaks(C, 0.1f, one, 1);
    REQUIRE(got.size() == 1);
    CHECK(got[0].score == 1.f);

    // shape and threshold validation
    CHECK_THROWS_AS(keypoint_peaks(Tensor(2, 5, 5), 0.1f, one, 1), std::invalid_argument);
    CHECK_THROWS_AS(keypoint_peaks(K, 0.f, one, 1), std::invalid_argument);
    CHECK_THROWS_AS(keypoint_peaks(K, 1.f, one, 1), std::invalid_argument);
}

TEST_CASE("peak ordering is by type then descending score") {
    SkeletonSpec spec = pair_spec();
    Tensor K(2, 9, 9);
    add_gaussian(K, 0, 2.f, 2.f, 0.8f, 0.6f);
    add_gaussian(K, 0, 6.f, 6.f, 0.8f, 0.9f);
    add_gaussian(K, 1, 4.f, 4.f, 0.8f, 0.8f);
    std::vector<KeypointCandidate> got = keypoint_peaks(K, 0.2f, spec, 1);
    REQUIRE(got.size() == 3);
    CHECK(got[0].type == 0);
    CHECK(got[0].score == doctest::Approx(0.9f));
    CHECK(got[1].type == 0);
    CHECK(got[1].score == doctest::Approx(0.6f));
    CHECK(got[2].type == 1);
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i].id == static_cast<int>(i));
}

TEST_CASE("limb score measures field alignment") {
    // constant field (1, 0): the score equals the x component of the unit
    // direction between the endpoints, independent of the path cells
    Tensor P(2, 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) P.at(0, y, x) = 1.f;

    KeypointCandidate a = cand(0, 1.f, 4.f, 1.f, 0);
    for (auto [bx, by, want] : std::vector<std::tuple<float, float, float>>{
             {6.f, 4.f, 1.f},     // straight along the field
             {1.f, 7.f, 0.f},     // perpendicular
             {1.f + 3.f, 4.f + 3.f, std::sqrt(0.5f)},  // 45 degrees
         }) {
        KeypointCandidate b = cand(1, bx, by, 1.f, 1);
        CHECK(limb_score(P, a, b, 0, 10, 1) == doctest::Approx(want).epsilon(1e-5));
        // antiparallel flips the sign
        CHECK(limb_score(P, b, a, 0, 10, 1) == doctest::Approx(-want).epsilon(1e-5));
    }

    // coincident endpoints score zero by definition
    CHECK(limb_score(P, a, a, 0, 10, 1) == 0.f);

    // the mean over samples sees partial support: field only on x < 4
    Tensor H(2, 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 4; ++x) H.at(0, y, x) = 1.f;
    KeypointCandidate b = cand(1, 7.f, 4.f, 1.f, 1);
    // samples at x = 1, 5/3+1, ... : 10 points from 1 to 7, cells 1..7
    int inside = 0;
    for (int k = 0; k < 10; ++k) {
        float t = static_cast<float>(k) / 9.f;
        inside += std::lround(1.f + t * 6.f) < 4;
    }
    CHECK(limb_score(H, a, b, 0, 10, 1) ==
          doctest::Approx(static_cast<float>(inside) / 10.f).epsilon(1e-5));

    CHECK_THROWS_AS(limb_score(P, a, b, 1, 10, 1), std::invalid_argument);  // limb 1 absent
    CHECK_THROWS_AS(limb_score(P, a, b, 0, 1, 1), std::invalid_argument);
}

TEST_CASE("limb score respects the output stride mapping") {
    // field cell (2, 1) only; stride 4 puts it at image point (9.5, 5.5)
    Tensor P(2, 4, 4);
    P.at(0, 1, 2) = 1.f;
    KeypointCandidate a = cand(0, 9.5f, 5.5f, 1.f, 0);
    KeypointCandidate b = cand(1, 10.5f, 5.5f, 1.f, 1);
    // the whole segment stays inside grid cell (2, 1)
    CHECK(limb_score(P, a, b, 0, 10, 4) == doctest::Approx(1.f));
    // a segment two cells away sees nothing
    KeypointCandidate c = cand(0, 1.f, 13.f, 1.f, 2);
    KeypointCandidate d = cand(1, 2.f, 13.f, 1.f, 3);
    CHECK(limb_score(P, c, d, 0, 10, 4) == doctest::Approx(0.f));
}

TEST_CASE("assembly joins two clean chains into two skeletons") {
    SkeletonSpec spec;
    spec.name = "chain3";
    spec.keypoints = {"top", "mid", "low"};
    spec.limbs = {{0, 1}, {1, 2}};

    // two vertical people, both limbs pointing down; fields on their columns
    Tensor P(4, 12, 12);
    for (int y = 0; y < 12; ++y) {
        P.at(1, y, 2) = 1.f;  // limb 0 y-component, person A column
        P.at(1, y, 9) = 1.f;  // person B column
        P.at(3, y, 2) = 1.f;  // limb 1
        P.at(3, y, 9) = 1.f;
    }
    std::vector<KeypointCandidate> cands = {
        cand(0, 2.f, 1.f, 0.9f, 0), cand(0, 9.f, 1.f, 0.8f, 1),
        cand(1, 2.f, 5.f, 0.7f, 2), cand(1, 9.f, 5.f, 0.6f, 3),
        cand(2, 2.f, 9.f, 0.5f, 4), cand(2, 9.f, 9.f, 0.4f, 5),
    };
    std::vector<PersonSkeleton> out = greedy_assemble(cands, P, spec, 0.2f, 10, 1);
    check_valid(out, cands, spec, 0.2f);
    REQUIRE(out.size() == 2);
    // identify by the x coordinate
    const PersonSkeleton& a = out[0].joints[0].x == 2.f ? out[0] : out[1];
    const PersonSkeleton& b = out[0].joints[0].x == 2.f ? out[1] : out[0];
    for (int j = 0; j < 3; ++j) {
        REQUIRE(a.joints[j].present);
        REQUIRE(b.joints[j].present);
        CHECK(a.joints[j].x == 2.f);
        CHECK(b.joints[j].x == 9.f);
    }
    CHECK(a.limbs_used.size() == 2);
    CHECK(b.limbs_used.size() == 2);
    CHECK(a.total_score == doctest::Approx(0.9 + 0.7 + 0.5 + 2.0).epsilon(1e-4));
}

TEST_CASE("assembly merges disjoint groups and skips conflicting ones") {
    // four joint types; the last limb arrives when both sides already formed
    SkeletonSpec spec;
    spec.name = "quad";
    spec.keypoints = {"k0", "k1", "k2", "k3"};
    spec.limbs = {{0, 1}, {2, 3}, {0, 3}, {1, 2}};

    // person A on column x=2, person B on column x=9, joints at y=3,5,7,9
    std::vector<KeypointCandidate> cands = {
        cand(0, 2.f, 3.f, 0.5f, 0), cand(1, 2.f, 5.f, 0.5f, 1),
        cand(2, 2.f, 7.f, 0.5f, 2), cand(3, 2.f, 9.f, 0.5f, 3),
        cand(0, 9.f, 3.f, 0.5f, 4), cand(1, 9.f, 5.f, 0.5f, 5),
        cand(2, 9.f, 7.f, 0.5f, 6), cand(3, 9.f, 9.f, 0.5f, 7),
    };

    Tensor P(8, 12, 12);
    // limbs 0..2 all point straight down; constant (0, 1) fields
    for (int li : {0, 1, 2})
        for (size_t i = 0; i < P.plane(); ++i) P.ch(2 * li + 1)[i] = 1.f;
    // limb 3 field is aligned with the CROSS pair A1 -> B2, so the top-scored
    // pair would merge two complete skeletons; their slots overlap, the merge
    // is skipped, and the within-person pairs (scoring lower) win instead
    {
        float dx = 9.f - 2.f, dy = 7.f - 5.f;
        float n = std::hypot(dx, dy);
        for (size_t i = 0; i < P.plane(); ++i) {
            P.ch(6)[i] = dx / n;
            P.ch(7)[i] = dy / n;
        }
    }

    std::vector<PersonSkeleton> out = greedy_assemble(cands, P, spec, 0.2f, 10, 1);
    check_valid(out, cands, spec, 0.2f);
    REQUIRE(out.size() == 2);
    for (const PersonSkeleton& ps : out) {
        int present = 0;
        for (const auto& j : ps.joints) present += j.present;
        CHECK(present == 4);  // limbs 0+1 formed pairs, limb 2 merged them
        CHECK(ps.limbs_used.size() == 4);  // and limb 3 closed the loop inside
        float col = ps.joints[0].x;
        for (const auto& j : ps.joints) CHECK(j.x == col);  // no cross-person mix
    }
}

TEST_CASE("isolated candidates never form skeletons") {
    SkeletonSpec spec = pair_spec();
    Tensor P(2, 8, 8);  // zero field: no limb clears the threshold
    std::vector<KeypointCandidate> cands = {cand(0, 2.f, 2.f, 0.9f, 0),
                                            cand(1, 6.f, 6.f, 0.9f, 1)};
    CHECK(greedy_assemble(cands, P, spec, 0.05f, 10, 1).empty());
    CHECK(greedy_assemble({}, P, spec, 0.05f, 10, 1).empty());

    std::vector<KeypointCandidate> bad = {cand(7, 2.f, 2.f, 0.9f, 0)};
    CHECK_THROWS_AS(greedy_assemble(bad, P, spec, 0.05f, 10, 1), std::invalid_argument);
}

TEST_CASE("assembly output is structurally valid on random inputs") {
    SkeletonSpec spec = standard_skeleton();
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        Tensor P(2 * spec.limb_count(), 12, 12);
        for (float& v : P.v) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        std::vector<KeypointCandidate> cands;
        int id = 0;
        for (int j = 0; j < spec.joint_count(); ++j) {
            int n = static_cast<int>(rng.uniform_int(4));
            for (int k = 0; k < n; ++k)
                cands.push_back(cand(j, static_cast<float>(rng.uniform(0.0, 11.0)),
                                     static_cast<float>(rng.uniform(0.0, 11.0)),
                                     static_cast<float>(rng.uniform(0.2, 1.0)), id++));
        }
        std::vector<PersonSkeleton> out = greedy_assemble(cands, P, spec, 0.05f, 6, 1);
        check_valid(out, cands, spec, 0.05f);
    }
}

TEST_CASE("greedy per-limb acceptance never beats the exhaustive matching") {
    SkeletonSpec spec = pair_spec();
    Rng rng(99);
    const float min_score = 0.05f;
    int nonempty = 0;
    for (int trial = 0; trial < 200; ++trial) {
        Tensor P(2, 10, 10);
        for (float& v : P.v) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        int na = 1 + static_cast<int>(rng.uniform_int(4));
        int nb = 1 + static_cast<int>(rng.uniform_int(4));
        std::vector<KeypointCandidate> cands;
        for (int i = 0; i < na; ++i)
            cands.push_back(cand(0, static_cast<float>(rng.uniform(0.0, 9.0)),
                                 static_cast<float>(rng.uniform(0.0, 9.0)), 0.5f, i));
        for (int i = 0; i < nb; ++i)
            cands.push_back(cand(1, static_cast<float>(rng.uniform(0.0, 9.0)),
                                 static_cast<float>(rng.uniform(0.0, 9.0)), 0.5f, na + i));

        std::vector<std::vector<float>> score(na, std::vector<float>(nb));
        for (int i = 0; i < na; ++i)
            for (int j = 0; j < nb; ++j)
                score[i][j] = limb_score(P, cands[i], cands[na + j], 0, 10, 1);

        std::vector<PersonSkeleton> out = greedy_assemble(cands, P, spec, min_score, 10, 1);
        check_valid(out, cands, spec, min_score);

        double greedy_total = 0;
        std::set<int> rows, cols;
        for (const PersonSkeleton& ps : out) {
            REQUIRE(ps.limbs_used.size() == 1);
            greedy_total += ps.limbs_used[0].second;
            // a valid matching uses each endpoint once
            CHECK(rows.insert(ps.joints[0].candidate_id).second);
            CHECK(cols.insert(ps.joints[1].candidate_id).second);
        }
        double oracle = best_matching(score, min_score);
        CHECK(greedy_total <= oracle + 1e-5);
        nonempty += !out.empty();
    }
    CHECK(nonempty > 100);  // the setup actually exercises acceptance
}

TEST_CASE("part segmentation takes the per-pixel argmax with ties to the lowest class") {
    Tensor s(3, 2, 2);
    // pixel (0,0): clear winner 2; (0,1): tie 0 vs 1; (1,0): tie 1 vs 2;
    // (1,1): all equal
    s.at(0, 0, 0) = 0.1f; s.at(1, 0, 0) = 0.2f; s.at(2, 0, 0) = 0.7f;
    s.at(0, 0, 1) = 0.4f; s.at(1, 0, 1) = 0.4f; s.at(2, 0, 1) = 0.2f;
    s.at(0, 1, 0) = 0.1f; s.at(1, 1, 0) = 0.45f; s.at(2, 1, 0) = 0.45f;
    s.at(0, 1, 1) = 0.3f; s.at(1, 1, 1) = 0.3f; s.at(2, 1, 1) = 0.3f;
    LabelMap got = part_segmentation(s);
    CHECK(got.at(0, 0) == 2);
    CHECK(got.at(0, 1) == 0);
    CHECK(got.at(1, 0) == 1);
    CHECK(got.at(1, 1) == 0);

    s.at(0, 0, 0) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(part_segmentation(s), std::invalid_argument);
}

TEST_CASE("multiscale part scores: shape, probabilities, duplication invariance") {
    net::ModelConfig mc;
    mc.backbone_depth = net::BackbonePreset::tiny;
    mc.feature_channels = 8;
    mc.output_stride = 4;
    mc.spec = pair_spec();
    mc.taxonomy.name = "duo";
    mc.taxonomy.classes = {"background", "top", "bottom"};
    net::Model m = net::build_model(mc);
    Rng rng(3);
    for (net::Param& p : m.params)
        for (float& w : p.w) w += 0.1f * static_cast<float>(rng.normal());

    ImageU8 img(24, 20, 3);
    for (size_t i = 0; i < img.v.size(); ++i) img.v[i] = static_cast<uint8_t>((i * 91) % 256);

    Tensor one = multiscale_part_scores(m, img, {1.0f});
    CHECK(one.c == 3);
    CHECK(one.h == 24);
    CHECK(one.w == 20);
    // single scale: bilinear upsampling preserves the per-pixel simplex
    for (size_t i = 0; i < one.plane(); ++i) {
        float sum = 0;
        for (int z = 0; z < 3; ++z) {
            float v = one.v[z * one.plane() + i];
            CHECK(v >= 0.f);
            CHECK(v <= 1.f);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.f).epsilon(1e-4));
    }

    // listing the same scale twice changes nothing (max of equal maps)
    Tensor twice = multiscale_part_scores(m, img, {1.0f, 1.0f});
    CHECK(std::memcmp(one.v.data(), twice.v.data(), one.size() * sizeof(float)) == 0);

    // an extra scale can only raise the elementwise max
    Tensor multi = multiscale_part_scores(m, img, {1.0f, 1.5f});
    for (size_t i = 0; i < one.size(); ++i) CHECK(multi.v[i] >= one.v[i]);

    // scales below one output cell are skipped; all skipped is an error
    CHECK_NOTHROW(multiscale_part_scores(m, img, {0.01f, 1.0f}));
    CHECK_THROWS_AS(multiscale_part_scores(m, img, {0.01f}), std::invalid_argument);
    CHECK_THROWS_AS(multiscale_part_scores(m, img, {}), std::invalid_argument);
}

TEST_CASE("ground-truth maps decode back to the exact people") {
    SkeletonSpec spec = standard_skeleton();
    PartTaxonomy tax = body_part_taxonomy();
    SceneConfig sc;
    sc.height = 64;
    sc.width = 64;
    sc.min_persons = 1;
    sc.max_persons = 2;
    sc.min_separation = 10.f;
    sc.margin = 5.f;

    // stride 2: the finest limbs (nose to eye, a few px) must span at least
    // one output cell or their field support is thinner than the sampling
    const int stride = 2;
    Rng rng(31);
    int scenes = 0, people = 0;
    for (int trial = 0; trial < 200 && scenes < 20; ++trial) {
        uint64_t before = placement_retry_overflows();
        AnnotatedSample s = generate_scene(sc, rng);
        if (placement_retry_overflows() != before) continue;  // forced overlap
        ++scenes;

        TargetBundle t = make_targets(s, spec, tax, stride, 1.0f, 1.0f);
        Tensor K(t.J, t.h, t.w), P(2 * t.C, t.h, t.w);
        std::copy(t.K.begin(), t.K.end(), K.v.begin());
        std::copy(t.P.begin(), t.P.end(), P.v.begin());

        std::vector<KeypointCandidate> cands = keypoint_peaks(K, 0.3f, spec, stride);
        std::vector<PersonSkeleton> out = greedy_assemble(cands, P, spec, 0.05f, 10, stride);
        check_valid(out, cands, spec, 0.05f);

        REQUIRE(out.size() == s.persons.size());
        // each decoded skeleton must match one annotated person exactly
        std::vector<char> taken(s.persons.size(), 0);
        for (const PersonSkeleton& ps : out) {
            int match = -1;
            for (size_t pi = 0; pi < s.persons.size(); ++pi) {
                if (taken[pi]) continue;
                bool all = true;
                for (int j = 0; j < spec.joint_count() && all; ++j) {
                    const Keypoint& gt = s.persons[pi].keypoints[j];
                    if (!gt.labeled || !ps.joints[j].present) {
                        all = gt.labeled == ps.joints[j].present;
                        continue;
                    }
                    float dx = ps.joints[j].x - gt.x, dy = ps.joints[j].y - gt.y;
                    all = std::hypot(dx, dy) <= 2.f;
                }
                if (all) {
                    match = static_cast<int>(pi);
                    break;
                }
            }
            REQUIRE(match >= 0);
            taken[match] = 1;
            ++people;
        }
    }
    REQUIRE(scenes == 20);
    CHECK(people >= 20);
}

TEST_CASE("infer returns labels plus skeletons and honors head extension") {
    net::ModelConfig mc;
    mc.backbone_depth = net::BackbonePreset::tiny;
    mc.feature_channels = 8;
    mc.output_stride = 4;
    mc.spec = standard_skeleton();
    mc.taxonomy = body_part_taxonomy();
    net::Model m = net::build_model(mc);

    ImageU8 img(32, 32, 3);
    for (size_t i = 0; i < img.v.size(); ++i) img.v[i] = static_cast<uint8_t>((i * 13) % 256);

    DecodeOptions opt;
    opt.scales = {1.0f};
    InferResult res = infer(m, img, opt);
    CHECK(res.labels.h == 32);
    CHECK(res.labels.w == 32);
    for (uint8_t v : res.labels.v) CHECK(v <= 14);
    CHECK(res.novel_skeletons.empty());  // no extra heads on this model

    InferResult again = infer(m, img, opt);
    CHECK(res.labels == again.labels);
    CHECK(res.skeletons.size() == again.skeletons.size());

    net::extend_heads(m, novel_skeleton());
    InferResult ext = infer(m, img, opt);
    CHECK(ext.labels == res.labels);  // part head untouched by the extension
    CHECK(ext.skeletons.size() == res.skeletons.size());

    DecodeOptions bad;
    bad.paf_samples = 0;
    CHECK_THROWS_AS(infer(m, img, bad), std::invalid_argument);
}
