#pragma once

#include <functional>

#include "voken/diffusion/schedule.hpp"
#include "voken/diffusion/unet.hpp"
#include "voken/synth/scene.hpp"

namespace voken::diffusion {

// Supplies the unconditional condition (mapped zero vokens during voken
// training, the empty-caption feature during stage 0 and the no-CFG
// baseline). Re-invoked per use so it always sees current parameters.
using NullCondFn = std::function<Ptr(Graph&)>;

// Noise predictor signature: (graph, z_t, t, condition) -> predicted noise.
using DenoiserFn = std::function<Ptr(Graph&, const Ptr&, int, const Ptr&)>;

inline DenoiserFn as_denoiser(const UNet& unet) {
    return [&unet](Graph& g, const Ptr& z, int t, const Ptr& cond) {
        return unet.forward(g, z, t, cond);
    };
}

// One training sample of the denoising loss: draws t and eps, applies
// condition dropout with probability dropout_p (substituting the null
// condition), and returns the mean squared error between eps and the
// prediction. Gradients flow into the condition.
struct LdmSampleLoss {
    Ptr loss;
    bool dropped = false;
    int t = 0;
};
LdmSampleLoss ldm_loss(Graph& g, const DenoiserFn& denoiser, const NoiseSchedule& ns,
                       const Ptr& z0, const Ptr& cond, const NullCondFn& null_cond,
                       real dropout_p, Rng& rng);

struct SamplerParams {
    real gamma = 1;
    int steps = 0;       // 0 or T: full ancestral chain; fewer: strided
    uint64_t seed = 0;
    Ptr cond;             // conditional input
    Ptr null_cond;        // negative / unconditional input
};

// Ancestral DDPM sampling with classifier-free guidance
//   eps_hat = eps(z,t,null) + gamma * (eps(z,t,cond) - eps(z,t,null)).
// gamma == 1 evaluates only the conditional branch and gamma == 0 only the
// unconditional one, so the collapses of the guidance formula are exact.
// Deterministic for a fixed seed.
synth::Image sample(const UNet& unet, const NoiseSchedule& ns, const SamplerParams& params);

}  // namespace voken::diffusion
