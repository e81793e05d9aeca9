#include "voken/diffusion/diffusion.hpp"

#include <cmath>

#include "voken/core/imageops.hpp"

namespace voken::diffusion {

LdmSampleLoss ldm_loss(Graph& g, const DenoiserFn& denoiser, const NoiseSchedule& ns,
                       const Ptr& z0, const Ptr& cond, const NullCondFn& null_cond,
                       real dropout_p, Rng& rng) {
    require(dropout_p >= 0 && dropout_p <= 1, "ldm_loss: dropout_p must be in [0,1]");
    LdmSampleLoss out;
    out.t = int(rng.uniform_int(1, ns.T));
    Ptr eps = make_tensor(z0->shape, false);
    for (auto& x : eps->v) x = rng.normal();
    out.dropped = dropout_p > 0 && rng.bernoulli(dropout_p);
    Ptr used = out.dropped ? null_cond(g) : cond;
    Ptr zt = q_sample(g, ns, z0, out.t, eps);
    Ptr pred = denoiser(g, zt, out.t, used);
    out.loss = g.mse(pred, eps);
    return out;
}

synth::Image sample(const UNet& unet, const NoiseSchedule& ns, const SamplerParams& params) {
    require(params.gamma >= 0, "sample: gamma must be >= 0");
    const int steps = params.steps == 0 ? ns.T : params.steps;
    require(steps >= 1 && steps <= ns.T, "sample: steps must be in [1,T]");
    require(params.cond != nullptr, "sample: missing condition");
    require(params.gamma == 1 || params.null_cond != nullptr,
            "sample: missing negative condition");

    // evenly spaced timesteps, descending, always ending at 1
    std::vector<int> ts(static_cast<size_t>(steps), 0);
    for (int i = 0; i < steps; ++i)
        ts[size_t(i)] = 1 + int(std::llround(double(i) * double(ns.T - 1) /
                                             double(std::max(1, steps - 1))));
    if (steps == 1) ts[0] = ns.T;

    Rng rng(params.seed);
    const int px = unet.config().image_px;
    Ptr z = make_tensor({3, px, px}, false);
    for (auto& x : z->v) x = rng.normal();

    const bool need_uncond = params.gamma != real(1);
    const bool need_cond = params.gamma != real(0);

    for (int i = steps - 1; i >= 0; --i) {
        const int t = ts[size_t(i)];
        const int t_prev = i > 0 ? ts[size_t(i - 1)] : 0;
        const real ab = ns.alpha_bar(t);
        const real ab_prev = ns.alpha_bar(t_prev);
        const real alpha_eff = ab / ab_prev;
        const real beta_eff = real(1) - alpha_eff;

        Graph g(false);
        Ptr eps_hat;
        if (need_cond && need_uncond) {
            Ptr ec = unet.forward(g, z, t, params.cond);
            Ptr eu = unet.forward(g, z, t, params.null_cond);
            eps_hat = make_tensor(z->shape, false);
            for (int64_t j = 0; j < eps_hat->size(); ++j)
                eps_hat->v[size_t(j)] = guided_eps(eu->v[size_t(j)], ec->v[size_t(j)], params.gamma);
        } else if (need_cond) {
            eps_hat = unet.forward(g, z, t, params.cond);
        } else {
            eps_hat = unet.forward(g, z, t, params.null_cond);
        }

        const real c1 = real(1) / std::sqrt(alpha_eff);
        const real c2 = beta_eff / std::sqrt(real(1) - ab);
        Ptr next = make_tensor(z->shape, false);
        for (int64_t j = 0; j < z->size(); ++j)
            next->v[size_t(j)] = c1 * (z->v[size_t(j)] - c2 * eps_hat->v[size_t(j)]);
        if (t_prev > 0) {
            const real sigma = std::sqrt(beta_eff * (real(1) - ab_prev) / (real(1) - ab));
            for (auto& x : next->v) x += sigma * rng.normal();
        }
        z = next;
    }
    return tensor_to_image(*z);
}

}  // namespace voken::diffusion
