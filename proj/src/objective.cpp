#include "cdcl/objective.hpp"

#include <cmath>
#include <cstdio>

#include "cdcl/sample.hpp"

namespace cdcl {

std::string to_string(Domain d) {
    return d == Domain::synthetic ? "synthetic" : "real";
}

Domain domain_from_string(const std::string& s) {
    if (s == "synthetic") return Domain::synthetic;
    if (s == "real") return Domain::real;
    throw std::invalid_argument("unknown domain '" + s + "'");
}

void validate(const LossWeights& w) {
    if (!(w.alpha >= 0.0) || !(w.beta >= 0.0) || !(w.gamma >= 0.0) ||
        !std::isfinite(w.alpha) || !std::isfinite(w.beta) || !std::isfinite(w.gamma))
        throw std::invalid_argument("LossWeights: weights must be finite and non-negative");
}

TermInputs<float> term_inputs(const LossItem& item, bool real) {
    const TargetBundle& t = *item.target;
    const ModelOutput& o = *item.out;
    if (o.K_hat.c != t.J || o.K_hat.h != t.h || o.K_hat.w != t.w || o.P_hat.c != 2 * t.C ||
        o.P_hat.h != t.h || o.P_hat.w != t.w)
        throw std::invalid_argument("loss_total: prediction/target shape mismatch");
    if (t.has_parts && (o.B_hat.c != t.Z + 1 || o.B_hat.h != t.h || o.B_hat.w != t.w))
        throw std::invalid_argument("loss_total: part prediction/target shape mismatch");
    TermInputs<float> in;
    in.K = t.K.data();
    in.P = t.P.data();
    in.B = t.B.data();
    in.M = t.M.data();
    in.K_hat = o.K_hat.v.data();
    in.P_hat = o.P_hat.v.data();
    in.B_logits = o.B_hat.v.data();
    in.J = t.J;
    in.C = t.C;
    in.Z = t.Z;
    in.h = t.h;
    in.w = t.w;
    in.has_parts = t.has_parts;
    in.real = real;
    return in;
}

LossBreakdown loss_total(std::span<const LossItem> real, std::span<const LossItem> synthetic,
                         const LossWeights& weights, bool allow_real_parts) {
    std::vector<TermInputs<float>> items;
    items.reserve(real.size() + synthetic.size());
    for (const LossItem& it : real) items.push_back(term_inputs(it, true));
    for (const LossItem& it : synthetic) items.push_back(term_inputs(it, false));
    return loss_total_terms<float>(items, weights, allow_real_parts);
}

std::string csv_header(bool with_real_parts) {
    std::string h = "step,kpts_r,paf_r,kpts_s,paf_s,part_s";
    if (with_real_parts) h += ",part_r";
    return h + ",total";
}

std::string csv_row(int step, const LossBreakdown& b, bool with_real_parts) {
    char buf[256];
    if (with_real_parts)
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", step, b.kpts_r,
                      b.paf_r, b.kpts_s, b.paf_s, b.part_s, b.part_r, b.total);
    else
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", step, b.kpts_r,
                      b.paf_r, b.kpts_s, b.paf_s, b.part_s, b.total);
    return buf;
}

}  // namespace cdcl
