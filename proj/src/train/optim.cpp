#include "voken/train/optim.hpp"

#include <cmath>

namespace voken::train {

void AdamW::step(const std::vector<ParamEntry>& params) {
    ++t_;
    const real bc1 = real(1) - std::pow(cfg_.beta1, real(t_));
    const real bc2 = real(1) - std::pow(cfg_.beta2, real(t_));
    for (const auto& e : params) {
        Tensor& p = *e.t;
        require(p.requires_grad, "optimizer step on frozen parameter " + e.name);
        auto& st = state_[e.t.get()];
        if (st.m.empty()) {
            st.m.assign(p.v.size(), real(0));
            st.v.assign(p.v.size(), real(0));
        }
        const int64_t n = p.size();
        for (int64_t i = 0; i < n; ++i) {
            const real g = p.g[i];
            if (!std::isfinite(g))
                fail("non-finite gradient in parameter group " + e.name);
            st.m[i] = cfg_.beta1 * st.m[i] + (real(1) - cfg_.beta1) * g;
            st.v[i] = cfg_.beta2 * st.v[i] + (real(1) - cfg_.beta2) * g * g;
            const real mh = st.m[i] / bc1;
            const real vh = st.v[i] / bc2;
            p.v[i] -= cfg_.lr * (mh / (std::sqrt(vh) + cfg_.eps) + cfg_.weight_decay * p.v[i]);
        }
    }
}

}  // namespace voken::train
