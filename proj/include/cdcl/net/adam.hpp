#pragma once

#include <vector>

#include "cdcl/net/model.hpp"

namespace cdcl::net {

// Adam with bias correction. State is per-parameter and sized lazily on the
// first step so the optimizer can be constructed before head extension.
class Adam {
  public:
    explicit Adam(double lr = 0.001, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // Applies one update from the accumulated gradients, then clears them.
    void step(Model& m);

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }
    long long steps_taken() const { return t_; }

  private:
    double lr_, beta1_, beta2_, eps_;
    long long t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

}  // namespace cdcl::net
