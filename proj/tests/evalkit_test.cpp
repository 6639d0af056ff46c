#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <sstream>
#include <vector>

#include "cdcl/evalkit.hpp"
#include "cdcl/rng.hpp"
#include "cdcl/skeleton.hpp"
#include "cdcl/synthgen.hpp"

using namespace cdcl;

namespace {

LabelMap labels2x3(std::initializer_list<uint8_t> v) {
    LabelMap m(2, 3);
    std::copy(v.begin(), v.end(), m.v.begin());
    return m;
}

net::Model tiny_model() {
    net::ModelConfig mc;
    mc.backbone_depth = net::BackbonePreset::tiny;
    mc.feature_channels = 8;
    mc.output_stride = 4;
    mc.spec = standard_skeleton();
    mc.taxonomy = body_part_taxonomy();
    mc.init_seed = 11;
    net::Model m = net::build_model(mc);
    Rng rng(2);  // nudge the heads off their near-zero init
    for (net::Param& p : m.params)
        for (float& w : p.w) w += 0.05f * static_cast<float>(rng.normal());
    return m;
}

std::vector<AnnotatedSample> tiny_scenes(int n) {
    SceneConfig sc;
    sc.height = 32;
    sc.width = 32;
    sc.min_persons = 1;
    sc.max_persons = 1;
    Rng rng(7);
    std::vector<AnnotatedSample> out;
    for (int i = 0; i < n; ++i) out.push_back(generate_scene(sc, rng));
    return out;
}

}  // namespace

TEST_CASE("accumulate counts pixel pairs and honors the mask") {
    ConfusionMatrix conf(3);
    LabelMap gt = labels2x3({0, 1, 2, 0, 1, 2});
    LabelMap pred = labels2x3({0, 1, 2, 1, 1, 0});
    accumulate(conf, pred, gt);
    CHECK(conf.at(0, 0) == 1);
    CHECK(conf.at(1, 1) == 2);
    CHECK(conf.at(2, 2) == 1);
    CHECK(conf.at(0, 1) == 1);
    CHECK(conf.at(2, 0) == 1);
    CHECK(conf.at(1, 0) == 0);
    CHECK(conf.ignored == 0);

    uint64_t total = 0;
    for (uint64_t c : conf.counts) total += c;
    CHECK(total == 6);

    // mask = 0 diverts pixels to the ignored counter
    ConfusionMatrix masked(3);
    LabelMap mask = labels2x3({1, 1, 1, 0, 0, 0});
    accumulate(masked, pred, gt, &mask);
    CHECK(masked.ignored == 3);
    CHECK(masked.at(0, 0) == 1);
    CHECK(masked.at(1, 1) == 1);
    CHECK(masked.at(2, 2) == 1);
    CHECK(masked.at(0, 1) == 0);

    // shape and range violations
    LabelMap small(1, 3);
    CHECK_THROWS_AS(accumulate(conf, small, gt), std::invalid_argument);
    CHECK_THROWS_AS(accumulate(conf, pred, gt, &small), std::invalid_argument);
    LabelMap big = labels2x3({0, 0, 0, 0, 0, 3});
    CHECK_THROWS_AS(accumulate(conf, big, gt), std::out_of_range);
    CHECK_THROWS_AS(accumulate(conf, pred, big), std::out_of_range);
}

TEST_CASE("partition merge equals whole-image accumulation") {
    Rng rng(13);
    LabelMap gt(8, 8), pred(8, 8), mask(8, 8);
    for (auto* m : {&gt, &pred})
        for (uint8_t& v : m->v) v = static_cast<uint8_t>(rng.uniform_int(5));
    for (uint8_t& v : mask.v) v = static_cast<uint8_t>(rng.uniform_int(2));

    ConfusionMatrix whole(5);
    accumulate(whole, pred, gt, &mask);

    // split into top and bottom halves
    ConfusionMatrix top(5), bottom(5);
    auto half = [](const LabelMap& m, int y0) {
        LabelMap h(4, 8);
        std::copy(m.v.begin() + y0 * 8, m.v.begin() + (y0 + 4) * 8, h.v.begin());
        return h;
    };
    LabelMap gt_t = half(gt, 0), gt_b = half(gt, 4);
    LabelMap pr_t = half(pred, 0), pr_b = half(pred, 4);
    LabelMap mk_t = half(mask, 0), mk_b = half(mask, 4);
    accumulate(top, pr_t, gt_t, &mk_t);
    accumulate(bottom, pr_b, gt_b, &mk_b);
    top.merge(bottom);
    CHECK(top.counts == whole.counts);
    CHECK(top.ignored == whole.ignored);

    ConfusionMatrix other(4);
    CHECK_THROWS_AS(top.merge(other), std::invalid_argument);
}

TEST_CASE("per-class intersection over union from hand-built matrices") {
    // class 0: TP=4, FP=1, FN=1 -> 4/6; class 1: TP=2, FP=1, FN=1 -> 2/4
    ConfusionMatrix conf(2);
    conf.at(0, 0) = 4;
    conf.at(0, 1) = 1;
    conf.at(1, 0) = 1;
    conf.at(1, 1) = 2;
    IouReport r = miou(conf);
    REQUIRE(r.iou.size() == 2);
    CHECK(r.defined[0]);
    CHECK(r.defined[1]);
    CHECK(r.iou[0] == doctest::Approx(4.0 / 6.0));
    CHECK(r.iou[1] == doctest::Approx(0.5));
    CHECK(r.defined_count == 2);
    CHECK(r.mean == doctest::Approx((4.0 / 6.0 + 0.5) / 2));

    // a class that is predicted but never correct scores zero yet still
    // counts toward the mean: [0.5, 0.0] averages to 0.25
    ConfusionMatrix z(2);
    z.at(0, 0) = 2;
    z.at(0, 1) = 2;  // class 1 predicted where gt says 0
    IouReport rz = miou(z);
    CHECK(rz.iou[0] == doctest::Approx(0.5));
    CHECK(rz.iou[1] == doctest::Approx(0.0));
    CHECK(rz.defined[1]);  // zero but defined
    CHECK(rz.mean == doctest::Approx(0.25));
}

TEST_CASE("classes absent from gt and prediction are left out of the mean") {
    ConfusionMatrix conf(4);
    conf.at(0, 0) = 10;
    conf.at(1, 1) = 5;
    conf.at(1, 0) = 5;
    // classes 2 and 3 never appear
    IouReport r = miou(conf);
    CHECK(r.defined_count == 2);
    CHECK_FALSE(r.defined[2]);
    CHECK_FALSE(r.defined[3]);
    CHECK(r.iou[1] == doctest::Approx(0.5));
    CHECK(r.mean == doctest::Approx((10.0 / 15.0 + 0.5) / 2));

    ConfusionMatrix empty(4);
    IouReport re = miou(empty);
    CHECK(re.defined_count == 0);
    CHECK(re.mean == 0.0);
}

TEST_CASE("background can be reported without entering the mean") {
    ConfusionMatrix conf(3);
    conf.at(0, 0) = 8;
    conf.at(0, 1) = 2;  // bg iou 0.8
    conf.at(1, 1) = 3;
    conf.at(1, 2) = 1;  // class1 iou 3/4... plus fp from bg
    conf.at(2, 2) = 1;
    IouReport with = miou(conf, true);
    IouReport without = miou(conf, false);
    // per-class numbers identical; only the averaging set changes
    CHECK(with.iou == without.iou);
    CHECK(without.defined[0]);
    CHECK(without.iou[0] == doctest::Approx(0.8));
    CHECK(without.defined_count == 2);
    CHECK(with.defined_count == 3);
    double c1 = with.iou[1], c2 = with.iou[2];
    CHECK(without.mean == doctest::Approx((c1 + c2) / 2));
    CHECK(with.mean == doctest::Approx((0.8 + c1 + c2) / 3));
}

TEST_CASE("evaluate equals a hand-rolled infer/project/accumulate loop") {
    net::Model model = tiny_model();
    std::vector<AnnotatedSample> samples = tiny_scenes(2);
    PartTaxonomy body = body_part_taxonomy();
    TaxonomyProjection ident = identity_projection(body);
    DecodeOptions opt;
    opt.scales = {1.0f};

    EvalRow row = evaluate(model, samples, ident, body, opt);
    REQUIRE(row.class_names == body.classes);

    ConfusionMatrix conf(body.class_count());
    for (const AnnotatedSample& s : samples) {
        InferResult res = infer(model, s.image, opt);
        accumulate(conf, project_parts(res.labels, ident), project_parts(*s.parts, ident));
    }
    IouReport want = miou(conf);
    REQUIRE(row.report.iou.size() == want.iou.size());
    for (size_t z = 0; z < want.iou.size(); ++z) {
        CHECK(row.report.defined[z] == want.defined[z]);
        CHECK(row.report.iou[z] == want.iou[z]);  // same arithmetic, exact
    }
    CHECK(row.report.mean == want.mean);

    EvalRow again = evaluate(model, samples, ident, body, opt);
    CHECK(again.report.iou == row.report.iou);
    CHECK(again.report.mean == row.report.mean);
}

TEST_CASE("evaluate projects into the coarse taxonomy and honors ignore rects") {
    net::Model model = tiny_model();
    std::vector<AnnotatedSample> samples = tiny_scenes(2);
    PartTaxonomy pascal = pascal_part_taxonomy();
    DecodeOptions opt;
    opt.scales = {1.0f};

    EvalRow row = evaluate(model, samples, projection_body14_to_pascal6(), pascal, opt);
    CHECK(row.class_names == pascal.classes);
    CHECK(row.report.iou.size() == static_cast<size_t>(pascal.class_count()));
    CHECK(row.report.defined[0]);  // background always present in these scenes

    // blanket ignore rect: nothing is counted, nothing is defined
    std::vector<AnnotatedSample> blanket = samples;
    for (AnnotatedSample& s : blanket)
        s.ignore_regions.push_back(IgnoreRect{0.f, 0.f, 1000.f, 1000.f});
    EvalRow none = evaluate(model, blanket, projection_body14_to_pascal6(), pascal, opt);
    CHECK(none.report.defined_count == 0);
    CHECK(none.report.mean == 0.0);

    // a partial rect only removes its own pixels: mean still defined
    std::vector<AnnotatedSample> partial = samples;
    partial[0].ignore_regions.push_back(IgnoreRect{0.f, 0.f, 8.f, 8.f});
    EvalRow part = evaluate(model, partial, projection_body14_to_pascal6(), pascal, opt);
    CHECK(part.report.defined_count > 0);

    std::vector<AnnotatedSample> no_parts = samples;
    no_parts[0].parts.reset();
    CHECK_THROWS_AS(evaluate(model, no_parts, projection_body14_to_pascal6(), pascal, opt),
                    std::invalid_argument);

    DecodeOptions bad;
    bad.scales.clear();
    CHECK_THROWS_AS(evaluate(model, samples, projection_body14_to_pascal6(), pascal, bad),
                    std::invalid_argument);
}

TEST_CASE("csv header and rows carry one column per class plus the mean") {
    CHECK(eval_csv_header({"background", "torso"}) == "config_id,seed,background,torso,avg");

    EvalRow row;
    row.class_names = {"background", "torso", "head"};
    row.report.iou = {0.5, 0.25, 0.0};
    row.report.defined = {true, true, false};
    row.report.defined_count = 2;
    row.report.mean = 0.375;
    std::string s = eval_csv_row("baseline", 42, row);
    CHECK(s == "baseline,42,0.500000,0.250000,nan,0.375000");

    // column count always matches the header
    std::string header = eval_csv_header(row.class_names);
    CHECK(std::count(header.begin(), header.end(), ',') ==
          std::count(s.begin(), s.end(), ','));
}
