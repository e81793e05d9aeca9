#include "voken/mapper/mapper.hpp"

#include "voken/core/attention.hpp"

namespace voken::mapper {

FeatureMapper::Block FeatureMapper::make_block(ParamStore& store, Rng& rng,
                                               const std::string& prefix, bool cross) {
    const int w = cfg_.cond_dim;
    const real sd = real(0.05);
    Block b;
    b.has_cross = cross;
    auto mk = [&](const char* name, Shape shape, real s) {
        Ptr t = store.create(kGroupEncDec, prefix + name, std::move(shape));
        if (s > 0) t->fill_normal(rng, s);
        return t;
    };
    b.ln1_g = mk("ln1.g", {w}, 0);
    b.ln1_g->fill(1);
    b.ln1_b = mk("ln1.b", {w}, 0);
    b.wq = mk("wq", {w, w}, sd);
    b.wk = mk("wk", {w, w}, sd);
    b.wv = mk("wv", {w, w}, sd);
    b.wo = mk("wo", {w, w}, sd);
    if (cross) {
        b.lnc_g = mk("lnc.g", {w}, 0);
        b.lnc_g->fill(1);
        b.lnc_b = mk("lnc.b", {w}, 0);
        b.cq = mk("cq", {w, w}, sd);
        b.ck = mk("ck", {w, w}, sd);
        b.cv = mk("cv", {w, w}, sd);
        b.co = mk("co", {w, w}, sd);
    }
    b.ln2_g = mk("ln2.g", {w}, 0);
    b.ln2_g->fill(1);
    b.ln2_b = mk("ln2.b", {w}, 0);
    b.w1 = mk("ffn.w1", {w, 4 * w}, sd);
    b.b1 = mk("ffn.b1", {4 * w}, 0);
    b.w2 = mk("ffn.w2", {4 * w, w}, sd);
    b.b2 = mk("ffn.b2", {w}, 0);
    return b;
}

FeatureMapper::FeatureMapper(const MapperConfig& cfg, ParamStore& store, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    const real sd = real(0.05);
    mlp_w1 = store.create(kGroupMlp, "w1", {cfg_.d, cfg_.mlp_hidden});
    mlp_w1->fill_normal(rng, real(0.02));
    mlp_b1 = store.create(kGroupMlp, "b1", {cfg_.mlp_hidden});
    mlp_w2 = store.create(kGroupMlp, "w2", {cfg_.mlp_hidden, cfg_.cond_dim});
    mlp_w2->fill_normal(rng, real(0.02));
    mlp_b2 = store.create(kGroupMlp, "b2", {cfg_.cond_dim});

    if (cfg_.input_positions) {
        in_pos_ = store.create(kGroupEncDec, "in_pos", {cfg_.n, cfg_.cond_dim});
        in_pos_->fill_normal(rng, sd);
    }
    for (int l = 0; l < cfg_.enc_dec_layers; ++l)
        enc_.push_back(make_block(store, rng, "enc" + std::to_string(l) + ".", false));
    for (int l = 0; l < cfg_.enc_dec_layers; ++l)
        dec_.push_back(make_block(store, rng, "dec" + std::to_string(l) + ".", true));
    lnf_g_ = store.create(kGroupEncDec, "lnf.g", {cfg_.cond_dim});
    lnf_g_->fill(1);
    lnf_b_ = store.create(kGroupEncDec, "lnf.b", {cfg_.cond_dim});

    query_ = store.create(kGroupQuery, "q", {cfg_.cond_len, cfg_.cond_dim});
    query_->fill_normal(rng, sd);
}

Ptr FeatureMapper::run_block(Graph& g, const Block& b, Ptr x, const Ptr& memory) const {
    Ptr h = g.layernorm(x, b.ln1_g, b.ln1_b);
    x = g.add(x, multihead_attention(g, h, h, cfg_.n_heads, b.wq, b.wk, b.wv, b.wo));
    if (b.has_cross) {
        Ptr c = g.layernorm(x, b.lnc_g, b.lnc_b);
        x = g.add(x, multihead_attention(g, c, memory, cfg_.n_heads, b.cq, b.ck, b.cv, b.co));
    }
    Ptr m = g.layernorm(x, b.ln2_g, b.ln2_b);
    m = g.linear(m, b.w1, b.b1);
    m = g.gelu(m);
    m = g.linear(m, b.w2, b.b2);
    return g.add(x, m);
}

Ptr FeatureMapper::map(Graph& g, const Ptr& h) const {
    require(h->shape == Shape{cfg_.n, cfg_.d},
            "mapper: expected voken hidden of shape (" + std::to_string(cfg_.n) + "," +
                std::to_string(cfg_.d) + "), got " + shape_str(h->shape));
    Ptr x = g.linear(h, mlp_w1, mlp_b1);
    x = g.gelu(x);
    x = g.linear(x, mlp_w2, mlp_b2);  // [n, cond_dim]
    if (in_pos_) x = g.add(x, in_pos_);
    for (const auto& b : enc_) x = run_block(g, b, x, nullptr);
    Ptr y = query_;
    for (const auto& b : dec_) y = run_block(g, b, y, x);
    return g.layernorm(y, lnf_g_, lnf_b_);
}

Ptr FeatureMapper::map_null(Graph& g) const {
    return map(g, g.zeros({cfg_.n, cfg_.d}));
}

}  // namespace voken::mapper
