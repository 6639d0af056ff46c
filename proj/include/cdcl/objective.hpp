#pragma once

#include <span>

#include "cdcl/losses.hpp"
#include "cdcl/model_output.hpp"
#include "cdcl/targets.hpp"

namespace cdcl {

// Raw-pointer view of one sample's targets and predictions, templated so the
// full objective can be evaluated in double for finite-difference checks.
template <typename T>
struct TermInputs {
    const T* K = nullptr;
    const T* P = nullptr;
    const uint8_t* B = nullptr;
    const uint8_t* M = nullptr;
    const T* K_hat = nullptr;
    const T* P_hat = nullptr;
    const T* B_logits = nullptr;
    int J = 0, C = 0, Z = 0, h = 0, w = 0;
    bool has_parts = false;
    bool real = false;
};

// The weighted objective over one mixed batch:
//   alpha*(kpts_r + paf_r) + beta*(kpts_s + paf_s) + gamma*part_s
// With allow_real_parts, real-domain part labels add gamma*part_r to the
// same term; otherwise their presence is an error.
template <typename T>
LossBreakdown loss_total_terms(std::span<const TermInputs<T>> items, const LossWeights& weights,
                               bool allow_real_parts = false) {
    validate(weights);
    const Reduction red = weights.reduction;
    LossBreakdown b;
    for (const TermInputs<T>& it : items) {
        double lk = loss_kpts(it.K, it.K_hat, it.M, it.J, it.h, it.w, red);
        double lp = loss_paf(it.P, it.P_hat, it.M, it.C, it.h, it.w, red);
        if (it.real) {
            b.kpts_r += lk;
            b.paf_r += lp;
            if (it.has_parts) {
                if (!allow_real_parts)
                    throw std::invalid_argument(
                        "loss_total: real-domain part targets require the real-parts "
                        "configuration");
                b.part_r += loss_part(it.B, it.B_logits, it.M, it.Z, it.h, it.w, red);
            }
        } else {
            b.kpts_s += lk;
            b.paf_s += lp;
            if (it.has_parts)
                b.part_s += loss_part(it.B, it.B_logits, it.M, it.Z, it.h, it.w, red);
        }
    }
    b.total = weights.alpha * (b.kpts_r + b.paf_r) + weights.beta * (b.kpts_s + b.paf_s) +
              weights.gamma * (b.part_s + b.part_r);
    return b;
}

// One sample's prediction paired with its compiled ground truth.
struct LossItem {
    const ModelOutput* out = nullptr;
    const TargetBundle* target = nullptr;
};

TermInputs<float> term_inputs(const LossItem& item, bool real);

LossBreakdown loss_total(std::span<const LossItem> real, std::span<const LossItem> synthetic,
                         const LossWeights& weights, bool allow_real_parts = false);

}  // namespace cdcl
