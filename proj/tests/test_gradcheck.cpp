#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "voken/diffusion/diffusion.hpp"
#include "voken/diffusion/tau.hpp"
#include "voken/lm/lm.hpp"
#include "voken/mapper/mapper.hpp"

using namespace voken;

static_assert(sizeof(real) == 8, "gradient checks must run against the double build");

namespace {

constexpr real kTol = real(1e-3);  // relative error bound for every check
constexpr real kH = real(1e-5);

// central finite differences on sampled coordinates of every trainable
// parameter, against a full rebuild of the loss
void fd_check_params(ParamStore& store, const std::function<Ptr(Graph&)>& rebuild,
                     int coords_per_tensor, Rng& pick) {
    store.zero_grad();
    Graph g;
    Ptr loss = rebuild(g);
    g.backward(loss);

    for (const auto& e : store.trainable_entries()) {
        Tensor& p = *e.t;
        const int64_t n = p.size();
        for (int c = 0; c < coords_per_tensor; ++c) {
            const int64_t i = n <= coords_per_tensor ? c : int64_t(pick.uniform_int(n));
            if (i >= n) break;
            const real keep = p.v[size_t(i)];
            const real h = kH * std::max(real(1), std::fabs(keep));
            p.v[size_t(i)] = keep + h;
            Graph gp(false);
            const real fp = rebuild(gp)->v[0];
            p.v[size_t(i)] = keep - h;
            Graph gm(false);
            const real fm = rebuild(gm)->v[0];
            p.v[size_t(i)] = keep;
            const real numeric = (fp - fm) / (2 * h);
            const real analytic = p.g[size_t(i)];
            const real denom = std::max({real(1), std::fabs(analytic), std::fabs(numeric)});
            const real rel = std::fabs(analytic - numeric) / denom;
            if (rel >= kTol) {
                CAPTURE(e.name);
                CAPTURE(i);
                CAPTURE(analytic);
                CAPTURE(numeric);
            }
            REQUIRE(rel < kTol);
        }
    }
}

struct ToyPipeline {
    ParamStore store;
    lm::LMConfig lm_cfg;
    mapper::MapperConfig map_cfg;
    diffusion::UNetConfig unet_cfg;
    diffusion::TauConfig tau_cfg;
    std::unique_ptr<lm::CausalLM> model;
    std::unique_ptr<mapper::FeatureMapper> map;
    std::unique_ptr<diffusion::UNet> unet;
    std::unique_ptr<diffusion::CaptionEncoder> tau;
    diffusion::NoiseSchedule ns;

    explicit ToyPipeline(uint64_t seed) {
        Rng rng(seed);
        lm_cfg.d_model = 16;
        lm_cfg.n_layers = 2;
        lm_cfg.n_heads = 4;
        lm_cfg.context_length = 32;
        lm_cfg.vocab_size = 12;
        lm_cfg.n_vokens = 2;
        lm_cfg.img_tokens = 2;
        model = std::make_unique<lm::CausalLM>(lm_cfg, store, rng);

        map_cfg.n = 2;
        map_cfg.d = 16;
        map_cfg.cond_len = 3;
        map_cfg.cond_dim = 8;
        map_cfg.mlp_hidden = 16;
        map_cfg.enc_dec_layers = 4;
        map = std::make_unique<mapper::FeatureMapper>(map_cfg, store, rng);

        unet_cfg.base = 8;
        unet_cfg.cond_dim = 8;
        unet_cfg.temb_dim = 16;
        unet_cfg.image_px = 8;
        unet = std::make_unique<diffusion::UNet>(unet_cfg, store, rng);
        // randomize the zero-initialized output conv so its gradient path is live
        for (auto& e : store.group(diffusion::UNet::kGroup))
            if (e.name == "out.w") e.t->fill_normal(rng, real(0.05));
        // nonzero lm head for nontrivial text loss
        for (auto& e : store.group(lm::CausalLM::kGroupPretrained))
            if (e.name == "head") e.t->fill_normal(rng, real(0.1));

        tau_cfg.vocab_size = 12;
        tau_cfg.cond_len = 3;
        tau_cfg.cond_dim = 8;
        tau_cfg.n_layers = 1;
        tau = std::make_unique<diffusion::CaptionEncoder>(tau_cfg, store, rng);

        ns = diffusion::make_schedule(10, real(1e-3), real(0.02));
    }
};

}  // namespace

TEST_CASE("schedule product matches log-space summation to 1e-10 in double") {
    const auto ns = diffusion::make_schedule(200, real(1e-4), real(0.02));
    real log_ab = 0;
    for (int t = 1; t <= ns.T; ++t) log_ab += std::log(ns.alpha(t));
    CHECK(std::fabs(ns.alpha_bar(ns.T) - std::exp(log_ab)) < real(1e-10));
}

TEST_CASE("text loss gradients match finite differences (2-layer, d=16)") {
    ToyPipeline pipe(1);
    Rng pick(100);

    lm::PromptSpec prompt;
    prompt.ids = {1, 6, 7, 8, pipe.model->voken_id_base(), pipe.model->voken_id_base() + 1};
    const std::vector<int> targets = {6, 7, 8, pipe.model->voken_id_base(),
                                      pipe.model->voken_id_base() + 1, 2};
    const std::vector<uint8_t> mask = {0, 0, 1, 1, 1, 1};

    auto rebuild = [&](Graph& g) -> Ptr {
        const auto fr = pipe.model->forward(g, prompt);
        if (!g.recording()) {
            Graph gg(false);
            return lm::text_loss(gg, fr.logits, targets, mask).sum;
        }
        return lm::text_loss(g, fr.logits, targets, mask).sum;
    };
    fd_check_params(pipe.store, rebuild, 6, pick);
}

TEST_CASE("full UAS-style composite loss gradients incl. the condition path") {
    ToyPipeline pipe(2);
    Rng pick(200);

    // fixed sample: caption ids, voken block, target image, fixed t and eps
    lm::PromptSpec prompt;
    prompt.ids = {1, 6, 7, pipe.model->voken_id_base(), pipe.model->voken_id_base() + 1};
    const std::vector<int> targets = {6, 7, pipe.model->voken_id_base(),
                                      pipe.model->voken_id_base() + 1, 2};
    const std::vector<uint8_t> mask = {0, 0, 1, 1, 1};
    const std::vector<int> caption_ids = {6, 7};

    Rng data_rng(7);
    Ptr z0 = make_tensor({3, 8, 8}, false);
    z0->fill_normal(data_rng, real(0.5));
    Ptr eps = make_tensor({3, 8, 8}, false);
    eps->fill_normal(data_rng, 1);
    const int t_fixed = 4;

    auto rebuild = [&](Graph& g) -> Ptr {
        const auto fr = pipe.model->forward(g, prompt);
        Ptr h = pipe.model->extract_voken_hidden(
            g, fr.hidden, {3, 4},
            {pipe.model->voken_id_base(), pipe.model->voken_id_base() + 1});
        Ptr cond = pipe.map->map(g, h);
        Ptr zt = diffusion::q_sample(g, pipe.ns, z0, t_fixed, eps);
        Ptr pred = pipe.unet->forward(g, zt, t_fixed, cond);
        Ptr ldm = g.mse(pred, eps);
        Ptr cap = g.mse(cond, pipe.tau->encode_ids(g, caption_ids));
        Ptr text = g.cross_entropy_sum(fr.logits, targets, mask);
        return g.add(g.add(g.scale(text, real(0.01)), ldm), g.scale(cap, real(0.1)));
    };
    fd_check_params(pipe.store, rebuild, 4, pick);
}

TEST_CASE("dropped-condition (CFG null) path gradients") {
    ToyPipeline pipe(3);
    Rng pick(300);

    Rng data_rng(8);
    Ptr z0 = make_tensor({3, 8, 8}, false);
    z0->fill_normal(data_rng, real(0.5));
    Ptr eps = make_tensor({3, 8, 8}, false);
    eps->fill_normal(data_rng, 1);

    auto rebuild = [&](Graph& g) -> Ptr {
        Ptr cond = pipe.map->map_null(g);  // zero voken features through the mapper
        Ptr zt = diffusion::q_sample(g, pipe.ns, z0, 2, eps);
        Ptr pred = pipe.unet->forward(g, zt, 2, cond);
        return g.mse(pred, eps);
    };
    fd_check_params(pipe.store, rebuild, 4, pick);
}

TEST_CASE("mapper full Jacobian agrees with finite differences at toy dims") {
    ToyPipeline pipe(4);
    auto& m = *pipe.map;

    Ptr h = make_tensor({2, 16}, true);
    Rng rng(9);
    h->fill_normal(rng, 1);

    const int out_elems = pipe.map_cfg.cond_len * pipe.map_cfg.cond_dim;
    const int in_elems = int(h->size());

    // analytic Jacobian row by row: backward from each output coordinate
    std::vector<std::vector<real>> jac;
    jac.assign(size_t(out_elems), std::vector<real>(size_t(in_elems), real(0)));
    for (int o = 0; o < out_elems; ++o) {
        h->zero_grad();
        Graph g;
        Ptr y = m.map(g, h);
        std::vector<real> sel(size_t(out_elems), real(0));
        sel[size_t(o)] = 1;
        Ptr picked = g.mul(y, g.constant({pipe.map_cfg.cond_len, pipe.map_cfg.cond_dim},
                                         std::move(sel)));
        g.backward(g.sum(picked));
        for (int i = 0; i < in_elems; ++i) jac[size_t(o)][size_t(i)] = h->g[size_t(i)];
    }

    // finite differences column by column
    for (int i = 0; i < in_elems; ++i) {
        const real keep = h->v[size_t(i)];
        const real hh = kH * std::max(real(1), std::fabs(keep));
        h->v[size_t(i)] = keep + hh;
        Graph gp(false);
        const std::vector<real> fp = m.map(gp, h)->v;
        h->v[size_t(i)] = keep - hh;
        Graph gm(false);
        const std::vector<real> fm = m.map(gm, h)->v;
        h->v[size_t(i)] = keep;
        for (int o = 0; o < out_elems; ++o) {
            const real numeric = (fp[size_t(o)] - fm[size_t(o)]) / (2 * hh);
            const real analytic = jac[size_t(o)][size_t(i)];
            const real denom = std::max({real(1), std::fabs(analytic), std::fabs(numeric)});
            REQUIRE(std::fabs(analytic - numeric) / denom < kTol);
        }
    }
}
