#include "voken/diffusion/schedule.hpp"

#include <cmath>

namespace voken::diffusion {

NoiseSchedule make_schedule(int T, real beta1, real betaT) {
    require(T >= 1, "make_schedule: T must be >= 1");
    require(beta1 > 0 && beta1 <= betaT && betaT < 1, "make_schedule: need 0 < beta1 <= betaT < 1");
    NoiseSchedule ns;
    ns.T = T;
    ns.beta_.assign(size_t(T) + 1, real(0));
    ns.alpha_.assign(size_t(T) + 1, real(0));
    ns.alpha_bar_.assign(size_t(T) + 1, real(0));
    ns.alpha_bar_[0] = 1;
    for (int t = 1; t <= T; ++t) {
        const real frac = T == 1 ? real(0) : real(t - 1) / real(T - 1);
        ns.beta_[size_t(t)] = beta1 + (betaT - beta1) * frac;
        ns.alpha_[size_t(t)] = real(1) - ns.beta_[size_t(t)];
        ns.alpha_bar_[size_t(t)] = ns.alpha_bar_[size_t(t - 1)] * ns.alpha_[size_t(t)];
    }
    return ns;
}

Ptr q_sample(Graph& g, const NoiseSchedule& ns, const Ptr& z0, int t, const Ptr& eps) {
    require(t >= 1 && t <= ns.T, "q_sample: t must be in [1,T]");
    require(z0->shape == eps->shape, "q_sample: eps shape mismatch");
    const real a = std::sqrt(ns.alpha_bar(t));
    const real b = std::sqrt(real(1) - ns.alpha_bar(t));
    return g.add(g.scale(z0, a), g.scale(eps, b));
}

}  // namespace voken::diffusion
