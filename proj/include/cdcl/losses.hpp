#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdcl {

enum class Reduction { sum, mean };

// Weights of the three objective terms. Defaults are the shipped
// configuration alpha=1.0, beta=1.0, gamma=0.5.
struct LossWeights {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 0.5;
    Reduction reduction = Reduction::sum;
};

void validate(const LossWeights& w);

namespace detail {

inline void check_shapes(size_t pred, size_t target, size_t mask, int channels, int h, int w,
                         const char* who) {
    size_t plane = static_cast<size_t>(h) * w;
    if (target != plane * channels || pred != target || mask != plane)
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

inline size_t mask_support(const uint8_t* M, size_t plane) {
    size_t n = 0;
    for (size_t i = 0; i < plane; ++i) n += M[i] ? 1 : 0;
    return n;
}

// Masked squared error summed over channels and unmasked pixels. Masked
// pixels are skipped outright so their predictions never enter the sum.
template <typename T>
double masked_l2(const T* target, const T* pred, const uint8_t* M, int channels, int h, int w) {
    const size_t plane = static_cast<size_t>(h) * w;
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
        const T* t = target + c * plane;
        const T* p = pred + c * plane;
        for (size_t i = 0; i < plane; ++i) {
            if (!M[i]) continue;
            double d = static_cast<double>(t[i]) - static_cast<double>(p[i]);
            acc += d * d;
        }
    }
    return acc;
}

template <typename T>
void masked_l2_grad(const T* target, const T* pred, const uint8_t* M, int channels, int h, int w,
                    double scale, T* grad) {
    const size_t plane = static_cast<size_t>(h) * w;
    for (int c = 0; c < channels; ++c) {
        const T* t = target + c * plane;
        const T* p = pred + c * plane;
        T* g = grad + c * plane;
        for (size_t i = 0; i < plane; ++i)
            g[i] = M[i] ? static_cast<T>(scale * 2.0 *
                                         (static_cast<double>(p[i]) - static_cast<double>(t[i])))
                        : T(0);
    }
}

}  // namespace detail

// Eq.-style masked Euclidean loss over J keypoint maps.
template <typename T>
double loss_kpts(const T* K, const T* K_hat, const uint8_t* M, int J, int h, int w,
                 Reduction reduction) {
    double s = detail::masked_l2(K, K_hat, M, J, h, w);
    if (reduction == Reduction::mean) {
        size_t n = detail::mask_support(M, static_cast<size_t>(h) * w);
        return n == 0 ? 0.0 : s / (static_cast<double>(J) * n);
    }
    return s;
}

template <typename T>
void loss_kpts_grad(const T* K, const T* K_hat, const uint8_t* M, int J, int h, int w,
                    Reduction reduction, T* grad) {
    double scale = 1.0;
    if (reduction == Reduction::mean) {
        size_t n = detail::mask_support(M, static_cast<size_t>(h) * w);
        scale = n == 0 ? 0.0 : 1.0 / (static_cast<double>(J) * n);
    }
    detail::masked_l2_grad(K, K_hat, M, J, h, w, scale, grad);
}

// Masked Euclidean loss over C two-channel affinity fields; both vector
// components of limb c contribute to term c.
template <typename T>
double loss_paf(const T* P, const T* P_hat, const uint8_t* M, int C, int h, int w,
                Reduction reduction) {
    double s = detail::masked_l2(P, P_hat, M, 2 * C, h, w);
    if (reduction == Reduction::mean) {
        size_t n = detail::mask_support(M, static_cast<size_t>(h) * w);
        return n == 0 ? 0.0 : s / (static_cast<double>(C) * n);
    }
    return s;
}

template <typename T>
void loss_paf_grad(const T* P, const T* P_hat, const uint8_t* M, int C, int h, int w,
                   Reduction reduction, T* grad) {
    double scale = 1.0;
    if (reduction == Reduction::mean) {
        size_t n = detail::mask_support(M, static_cast<size_t>(h) * w);
        scale = n == 0 ? 0.0 : 1.0 / (static_cast<double>(C) * n);
    }
    detail::masked_l2_grad(P, P_hat, M, 2 * C, h, w, scale, grad);
}

// Masked categorical cross entropy over Z+1 classes (background included).
// Logits come in raw; the log-softmax lives here.
template <typename T>
double loss_part(const uint8_t* B, const T* B_logits, const uint8_t* M, int Z, int h, int w,
                 Reduction reduction) {
    const int classes = Z + 1;
    const size_t plane = static_cast<size_t>(h) * w;
    double acc = 0.0;
    size_t support = 0;
    for (size_t i = 0; i < plane; ++i) {
        if (B[i] >= classes)
            throw std::out_of_range("loss_part: label out of range");
        if (!M[i]) continue;
        ++support;
        double mx = static_cast<double>(B_logits[i]);
        for (int z = 1; z < classes; ++z)
            mx = std::max(mx, static_cast<double>(B_logits[z * plane + i]));
        double lse = 0.0;
        for (int z = 0; z < classes; ++z)
            lse += std::exp(static_cast<double>(B_logits[z * plane + i]) - mx);
        lse = mx + std::log(lse);
        acc -= static_cast<double>(B_logits[B[i] * plane + i]) - lse;
    }
    if (reduction == Reduction::mean) return support == 0 ? 0.0 : acc / support;
    return acc;
}

template <typename T>
void loss_part_grad(const uint8_t* B, const T* B_logits, const uint8_t* M, int Z, int h, int w,
                    Reduction reduction, T* grad) {
    const int classes = Z + 1;
    const size_t plane = static_cast<size_t>(h) * w;
    double scale = 1.0;
    if (reduction == Reduction::mean) {
        size_t n = detail::mask_support(M, plane);
        scale = n == 0 ? 0.0 : 1.0 / n;
    }
    for (size_t i = 0; i < plane; ++i) {
        if (!M[i]) {
            for (int z = 0; z < classes; ++z) grad[z * plane + i] = T(0);
            continue;
        }
        double mx = static_cast<double>(B_logits[i]);
        for (int z = 1; z < classes; ++z)
            mx = std::max(mx, static_cast<double>(B_logits[z * plane + i]));
        double lse = 0.0;
        for (int z = 0; z < classes; ++z)
            lse += std::exp(static_cast<double>(B_logits[z * plane + i]) - mx);
        for (int z = 0; z < classes; ++z) {
            double softmax = std::exp(static_cast<double>(B_logits[z * plane + i]) - mx) / lse;
            grad[z * plane + i] = static_cast<T>(scale * (softmax - (z == B[i] ? 1.0 : 0.0)));
        }
    }
}

// Per-term breakdown of the five-term objective (plus the real part term
// of the CDCL+Real extension). Terms are unweighted; total applies the
// weights.
struct LossBreakdown {
    double kpts_r = 0, paf_r = 0, kpts_s = 0, paf_s = 0, part_s = 0;
    double part_r = 0;  // nonzero only under CDCL+Real
    double total = 0;
};

std::string csv_header(bool with_real_parts);
std::string csv_row(int step, const LossBreakdown& b, bool with_real_parts);

}  // namespace cdcl
