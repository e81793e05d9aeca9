#include "voken/diffusion/unet.hpp"

#include <cmath>

#include "voken/core/attention.hpp"

namespace voken::diffusion {

UNet::ResBlock UNet::make_res(ParamStore& store, Rng& rng, const std::string& p, int cin,
                              int cout) {
    const real sd = real(0.05);
    ResBlock rb;
    rb.cin = cin;
    rb.cout = cout;
    auto mk = [&](const char* name, Shape shape, real s) {
        Ptr t = store.create(kGroup, p + name, std::move(shape));
        if (s > 0) t->fill_normal(rng, s);
        return t;
    };
    rb.gn1_g = mk("gn1.g", {cin}, 0);
    rb.gn1_g->fill(1);
    rb.gn1_b = mk("gn1.b", {cin}, 0);
    rb.w1 = mk("conv1.w", {cout, cin, 3, 3}, sd);
    rb.b1 = mk("conv1.b", {cout}, 0);
    rb.temb_w = mk("temb.w", {cfg_.temb_dim, cout}, real(0.02));
    rb.temb_b = mk("temb.b", {cout}, 0);
    rb.gn2_g = mk("gn2.g", {cout}, 0);
    rb.gn2_g->fill(1);
    rb.gn2_b = mk("gn2.b", {cout}, 0);
    rb.w2 = mk("conv2.w", {cout, cout, 3, 3}, sd);
    rb.b2 = mk("conv2.b", {cout}, 0);
    if (cin != cout) rb.skip_w = mk("skip.w", {cout, cin, 1, 1}, sd);
    return rb;
}

UNet::CrossAttn UNet::make_attn(ParamStore& store, Rng& rng, const std::string& p, int width) {
    const real sd = real(0.05);
    CrossAttn ca;
    auto mk = [&](const char* name, Shape shape, real s) {
        Ptr t = store.create(kGroup, p + name, std::move(shape));
        if (s > 0) t->fill_normal(rng, s);
        return t;
    };
    ca.ln_g = mk("ln.g", {width}, 0);
    ca.ln_g->fill(1);
    ca.ln_b = mk("ln.b", {width}, 0);
    ca.wq = mk("wq", {width, width}, sd);
    ca.wk = mk("wk", {cfg_.cond_dim, width}, sd);
    ca.wv = mk("wv", {cfg_.cond_dim, width}, sd);
    ca.wo = mk("wo", {width, width}, sd);
    return ca;
}

UNet::UNet(const UNetConfig& cfg, ParamStore& store, Rng& rng) : cfg_(cfg) {
    const int b = cfg_.base;
    const real sd = real(0.05);
    auto mk = [&](const char* name, Shape shape, real s) {
        Ptr t = store.create(kGroup, name, std::move(shape));
        if (s > 0) t->fill_normal(rng, s);
        return t;
    };
    // sinusoidal(64) -> temb_dim -> temb_dim
    temb_w1 = mk("temb.w1", {64, cfg_.temb_dim}, real(0.05));
    temb_b1 = mk("temb.b1", {cfg_.temb_dim}, 0);
    temb_w2 = mk("temb.w2", {cfg_.temb_dim, cfg_.temb_dim}, real(0.05));
    temb_b2 = mk("temb.b2", {cfg_.temb_dim}, 0);

    in_w = mk("in.w", {b, cfg_.in_channels, 3, 3}, sd);
    in_b = mk("in.b", {b}, 0);
    rb0_ = make_res(store, rng, "rb0.", b, b);
    ca0_ = make_attn(store, rng, "ca0.", b);
    down1_w = mk("down1.w", {2 * b, b, 3, 3}, sd);
    down1_b = mk("down1.b", {2 * b}, 0);
    rb1_ = make_res(store, rng, "rb1.", 2 * b, 2 * b);
    ca1_ = make_attn(store, rng, "ca1.", 2 * b);
    down2_w = mk("down2.w", {4 * b, 2 * b, 3, 3}, sd);
    down2_b = mk("down2.b", {4 * b}, 0);
    mid_ = make_res(store, rng, "mid.", 4 * b, 4 * b);
    ca_mid_ = make_attn(store, rng, "camid.", 4 * b);
    up1_w = mk("up1.w", {2 * b, 4 * b, 3, 3}, sd);
    up1_b = mk("up1.b", {2 * b}, 0);
    up1_rb_ = make_res(store, rng, "uprb1.", 4 * b, 2 * b);  // takes skip concat
    ca_up1_ = make_attn(store, rng, "caup1.", 2 * b);
    up2_w = mk("up2.w", {b, 2 * b, 3, 3}, sd);
    up2_b = mk("up2.b", {b}, 0);
    up2_rb_ = make_res(store, rng, "uprb2.", 2 * b, b);
    ca_up2_ = make_attn(store, rng, "caup2.", b);
    out_gn_g = mk("out.gn.g", {b}, 0);
    out_gn_g->fill(1);
    out_gn_b = mk("out.gn.b", {b}, 0);
    // zero-init output conv: the net predicts zero noise at start
    out_w = mk("out.w", {cfg_.in_channels, b, 3, 3}, 0);
    out_b = mk("out.b", {cfg_.in_channels}, 0);
}

Ptr UNet::time_embedding(Graph& g, int t) const {
    std::vector<real> s(64);
    for (int i = 0; i < 32; ++i) {
        const real w = std::exp(real(-std::log(10000.0)) * real(i) / real(31));
        s[size_t(i)] = std::sin(real(t) * w);
        s[size_t(32 + i)] = std::cos(real(t) * w);
    }
    Ptr x = g.constant({1, 64}, std::move(s));
    x = g.silu(g.linear(x, temb_w1, temb_b1));
    return g.linear(x, temb_w2, temb_b2);  // [1, temb_dim]
}

Ptr UNet::run_res(Graph& g, const ResBlock& rb, Ptr x, const Ptr& temb) const {
    Ptr h = g.groupnorm(x, std::min(cfg_.gn_groups, rb.cin), rb.gn1_g, rb.gn1_b);
    h = g.silu(h);
    h = g.conv2d(h, rb.w1, rb.b1, 1, 1);
    h = g.add_channelwise(h, g.linear(temb, rb.temb_w, rb.temb_b));
    h = g.groupnorm(h, std::min(cfg_.gn_groups, rb.cout), rb.gn2_g, rb.gn2_b);
    h = g.silu(h);
    h = g.conv2d(h, rb.w2, rb.b2, 1, 1);
    Ptr skip = rb.skip_w ? g.conv2d(x, rb.skip_w, nullptr, 1, 0) : x;
    return g.add(skip, h);
}

Ptr UNet::run_attn(Graph& g, const CrossAttn& ca, Ptr x, const Ptr& cond) const {
    const int c = x->shape[0], h = x->shape[1], w = x->shape[2];
    Ptr rows = g.chw_to_rows(x);
    Ptr hn = g.layernorm(rows, ca.ln_g, ca.ln_b);
    Ptr att = multihead_attention(g, hn, cond, 1, ca.wq, ca.wk, ca.wv, ca.wo);
    return g.rows_to_chw(g.add(rows, att), c, h, w);
}

Ptr UNet::forward(Graph& g, const Ptr& z, int t, const Ptr& cond) const {
    require(z->shape == Shape{cfg_.in_channels, cfg_.image_px, cfg_.image_px},
            "unet: bad input shape " + shape_str(z->shape));
    require(cond->shape.size() == 2 && cond->shape[1] == cfg_.cond_dim,
            "unet: bad condition shape " + shape_str(cond->shape));
    Ptr temb = time_embedding(g, t);

    Ptr x0 = g.conv2d(z, in_w, in_b, 1, 1);       // [b,32,32]
    x0 = run_res(g, rb0_, x0, temb);
    x0 = run_attn(g, ca0_, x0, cond);
    Ptr x1 = g.conv2d(x0, down1_w, down1_b, 2, 1);  // [2b,16,16]
    x1 = run_res(g, rb1_, x1, temb);
    x1 = run_attn(g, ca1_, x1, cond);
    Ptr x2 = g.conv2d(x1, down2_w, down2_b, 2, 1);  // [4b,8,8]
    x2 = run_res(g, mid_, x2, temb);
    x2 = run_attn(g, ca_mid_, x2, cond);

    Ptr u1 = g.conv2d(g.upsample2x(x2), up1_w, up1_b, 1, 1);  // [2b,16,16]
    u1 = run_res(g, up1_rb_, g.concat_channels(u1, x1), temb);
    u1 = run_attn(g, ca_up1_, u1, cond);
    Ptr u2 = g.conv2d(g.upsample2x(u1), up2_w, up2_b, 1, 1);  // [b,32,32]
    u2 = run_res(g, up2_rb_, g.concat_channels(u2, x0), temb);
    u2 = run_attn(g, ca_up2_, u2, cond);

    Ptr out = g.groupnorm(u2, std::min(cfg_.gn_groups, cfg_.base), out_gn_g, out_gn_b);
    out = g.silu(out);
    return g.conv2d(out, out_w, out_b, 1, 1);
}

}  // namespace voken::diffusion
