#include "cdcl/evalkit.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace cdcl {

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (classes != other.classes)
        throw std::invalid_argument("ConfusionMatrix::merge: class count mismatch");
    for (size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    ignored += other.ignored;
}

void accumulate(ConfusionMatrix& conf, const LabelMap& pred, const LabelMap& gt,
                const LabelMap* mask) {
    if (pred.h != gt.h || pred.w != gt.w)
        throw std::invalid_argument("accumulate: prediction/ground truth shape mismatch");
    if (mask && (mask->h != gt.h || mask->w != gt.w))
        throw std::invalid_argument("accumulate: mask shape mismatch");
    const size_t n = gt.v.size();
    for (size_t i = 0; i < n; ++i) {
        if (mask && mask->v[i] == 0) {
            ++conf.ignored;
            continue;
        }
        uint8_t g = gt.v[i], p = pred.v[i];
        if (g >= conf.classes || p >= conf.classes)
            throw std::out_of_range("accumulate: label outside matrix (" + std::to_string(g) +
                                    "," + std::to_string(p) + " vs " +
                                    std::to_string(conf.classes) + " classes)");
        ++conf.at(g, p);
    }
}

IouReport miou(const ConfusionMatrix& conf, bool include_background) {
    IouReport r;
    r.iou.assign(conf.classes, 0.0);
    r.defined.assign(conf.classes, false);
    double sum = 0;
    for (int z = 0; z < conf.classes; ++z) {
        uint64_t tp = conf.at(z, z);
        uint64_t fp = 0, fn = 0;
        for (int o = 0; o < conf.classes; ++o) {
            if (o == z) continue;
            fp += conf.at(o, z);
            fn += conf.at(z, o);
        }
        uint64_t denom = tp + fp + fn;
        if (denom == 0) continue;  // class absent everywhere: excluded from the mean
        r.defined[z] = true;
        r.iou[z] = static_cast<double>(tp) / static_cast<double>(denom);
        if (z == 0 && !include_background) continue;  // reported but not averaged
        sum += r.iou[z];
        ++r.defined_count;
    }
    r.mean = r.defined_count > 0 ? sum / r.defined_count : 0.0;
    return r;
}

EvalRow evaluate(const net::Model& model, const std::vector<AnnotatedSample>& samples,
                 const TaxonomyProjection& projection, const PartTaxonomy& target,
                 const DecodeOptions& options, bool include_background) {
    validate(options);
    ConfusionMatrix conf(target.class_count());
    for (const AnnotatedSample& s : samples) {
        if (!s.parts)
            throw std::invalid_argument("evaluate: sample carries no part labels");
        InferResult res = infer(model, s.image, options);
        LabelMap pred = project_parts(res.labels, projection);
        LabelMap gt = project_parts(*s.parts, projection);
        if (s.ignore_regions.empty()) {
            accumulate(conf, pred, gt);
        } else {
            LabelMap mask(gt.h, gt.w, 1);
            for (int y = 0; y < gt.h; ++y)
                for (int x = 0; x < gt.w; ++x)
                    for (const IgnoreRect& r : s.ignore_regions)
                        if (r.contains(static_cast<float>(x), static_cast<float>(y))) {
                            mask.at(y, x) = 0;
                            break;
                        }
            accumulate(conf, pred, gt, &mask);
        }
    }
    EvalRow row;
    row.class_names = target.classes;
    row.report = miou(conf, include_background);
    return row;
}

std::string eval_csv_header(const std::vector<std::string>& class_names) {
    std::string h = "config_id,seed";
    for (const std::string& c : class_names) h += "," + c;
    return h + ",avg";
}

std::string eval_csv_row(const std::string& config_id, uint64_t seed, const EvalRow& row) {
    std::string s = config_id + "," + std::to_string(seed);
    char buf[32];
    for (size_t z = 0; z < row.report.iou.size(); ++z) {
        if (row.report.defined[z]) {
            std::snprintf(buf, sizeof(buf), ",%.6f", row.report.iou[z]);
            s += buf;
        } else {
            s += ",nan";
        }
    }
    std::snprintf(buf, sizeof(buf), ",%.6f", row.report.mean);
    s += buf;
    return s;
}

}  // namespace cdcl
