#include "cdcl/net/adam.hpp"

#include <algorithm>
#include <cmath>

namespace cdcl::net {

void Adam::step(Model& model) {
    if (m_.size() < model.params.size()) {
        m_.resize(model.params.size());
        v_.resize(model.params.size());
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t pi = 0; pi < model.params.size(); ++pi) {
        Param& p = model.params[pi];
        std::vector<float>& m = m_[pi];
        std::vector<float>& v = v_[pi];
        if (m.size() != p.w.size()) {
            m.assign(p.w.size(), 0.f);
            v.assign(p.w.size(), 0.f);
        }
        for (size_t i = 0; i < p.w.size(); ++i) {
            double g = p.g[i];
            double mi = beta1_ * m[i] + (1.0 - beta1_) * g;
            double vi = beta2_ * v[i] + (1.0 - beta2_) * g * g;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            p.w[i] -= static_cast<float>(lr_ * (mi / c1) / (std::sqrt(vi / c2) + eps_));
        }
        std::fill(p.g.begin(), p.g.end(), 0.f);
    }
}

}  // namespace cdcl::net
