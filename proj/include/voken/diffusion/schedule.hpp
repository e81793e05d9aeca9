#pragma once

#include <vector>

#include "voken/core/graph.hpp"

namespace voken::diffusion {

// Linear-beta DDPM schedule. Accessors are 1-based in t; alpha_bar(0) == 1.
struct NoiseSchedule {
    int T = 0;
    std::vector<real> beta_;       // [T+1], beta_[0] unused
    std::vector<real> alpha_;      // [T+1]
    std::vector<real> alpha_bar_;  // [T+1], alpha_bar_[0] = 1

    real beta(int t) const { return beta_[check(t)]; }
    real alpha(int t) const { return alpha_[check(t)]; }
    real alpha_bar(int t) const {
        require(t >= 0 && t <= T, "schedule: t out of range");
        return alpha_bar_[size_t(t)];
    }

private:
    size_t check(int t) const {
        require(t >= 1 && t <= T, "schedule: t out of range");
        return size_t(t);
    }
};

NoiseSchedule make_schedule(int T, real beta1, real betaT);

// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps, t in [1,T]
Ptr q_sample(Graph& g, const NoiseSchedule& ns, const Ptr& z0, int t, const Ptr& eps);

// classifier-free guidance combination of unconditional/conditional noise
inline real guided_eps(real eps_uncond, real eps_cond, real gamma) {
    return eps_uncond + gamma * (eps_cond - eps_uncond);
}

}  // namespace voken::diffusion
