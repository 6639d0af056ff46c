#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cdcl/decode.hpp"
#include "cdcl/sample.hpp"
#include "cdcl/skeleton.hpp"

namespace cdcl {

// Square confusion matrix; rows are ground truth, columns predictions.
struct ConfusionMatrix {
    int classes = 0;
    std::vector<uint64_t> counts;
    uint64_t ignored = 0;

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int classes_)
        : classes(classes_), counts(static_cast<size_t>(classes_) * classes_, 0) {}

    uint64_t& at(int gt, int pred) { return counts[static_cast<size_t>(gt) * classes + pred]; }
    uint64_t at(int gt, int pred) const {
        return counts[static_cast<size_t>(gt) * classes + pred];
    }
    // Partition merge: plain elementwise addition.
    void merge(const ConfusionMatrix& other);
};

// Counts pixels where mask = 1 (or everywhere when mask is null); all other
// pixels increment `ignored`.
void accumulate(ConfusionMatrix& conf, const LabelMap& pred, const LabelMap& gt,
                const LabelMap* mask = nullptr);

struct IouReport {
    std::vector<double> iou;      // per class; meaningful only where defined
    std::vector<bool> defined;    // false when TP+FP+FN = 0
    double mean = 0;              // over defined classes
    int defined_count = 0;
};

// IoU_z = TP/(TP+FP+FN); classes absent from both prediction and ground
// truth are excluded from the mean. include_background drops class 0 from
// the mean (not from the matrix).
IouReport miou(const ConfusionMatrix& conf, bool include_background = true);

struct EvalRow {
    std::vector<std::string> class_names;
    IouReport report;
};

// Runs infer on every sample, projects predictions and ground truth into
// the projection's target taxonomy, and accumulates one confusion matrix.
// Ignore regions contribute no counts.
EvalRow evaluate(const net::Model& model, const std::vector<AnnotatedSample>& samples,
                 const TaxonomyProjection& projection, const PartTaxonomy& target,
                 const DecodeOptions& options, bool include_background = true);

std::string eval_csv_header(const std::vector<std::string>& class_names);
std::string eval_csv_row(const std::string& config_id, uint64_t seed, const EvalRow& row);

}  // namespace cdcl
