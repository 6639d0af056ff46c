#pragma once

#include <optional>

#include "cdcl/tensor.hpp"

namespace cdcl {

// Raw head outputs for one image. B_hat carries logits; no activation has
// been applied to any map.
struct ModelOutput {
    Tensor K_hat;                  // J x h' x w'
    Tensor P_hat;                  // 2C x h' x w'
    Tensor B_hat;                  // (Z+1) x h' x w'
    std::optional<Tensor> K2_hat;  // novel keypoint head, when extended
    std::optional<Tensor> P2_hat;
};

}  // namespace cdcl
