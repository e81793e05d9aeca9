#include "voken/diffusion/tau.hpp"

#include "voken/core/attention.hpp"

namespace voken::diffusion {

CaptionEncoder::CaptionEncoder(const TauConfig& cfg, ParamStore& store, Rng& rng) : cfg_(cfg) {
    require(cfg_.vocab_size > 0, "tau: vocab_size not set");
    const int w = cfg_.cond_dim;
    const real sd = real(0.05);
    emb_ = store.create(kGroup, "emb", {cfg_.vocab_size, w});
    emb_->fill_normal(rng, real(0.02));
    pos_ = store.create(kGroup, "pos", {cfg_.cond_len, w});
    pos_->fill_normal(rng, real(0.02));
    for (int l = 0; l < cfg_.n_layers; ++l) {
        Block b;
        const std::string p = "block" + std::to_string(l) + ".";
        auto mk = [&](const char* name, Shape shape, real s) {
            Ptr t = store.create(kGroup, p + name, std::move(shape));
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
        b.ln2_g = mk("ln2.g", {w}, 0);
        b.ln2_g->fill(1);
        b.ln2_b = mk("ln2.b", {w}, 0);
        b.w1 = mk("ffn.w1", {w, 4 * w}, sd);
        b.b1 = mk("ffn.b1", {4 * w}, 0);
        b.w2 = mk("ffn.w2", {4 * w, w}, sd);
        b.b2 = mk("ffn.b2", {w}, 0);
        blocks_.push_back(std::move(b));
    }
    lnf_g_ = store.create(kGroup, "lnf.g", {w});
    lnf_g_->fill(1);
    lnf_b_ = store.create(kGroup, "lnf.b", {w});
}

Ptr CaptionEncoder::encode_ids(Graph& g, const std::vector<int>& word_ids) const {
    ++encode_calls_;
    // [bos] words [eos], truncated / padded to exactly L
    std::vector<int> ids;
    ids.push_back(cfg_.bos_id);
    for (int id : word_ids) {
        require(id >= 0 && id < cfg_.vocab_size, "tau: word id out of range");
        ids.push_back(id);
    }
    ids.push_back(cfg_.eos_id);
    ids.resize(size_t(cfg_.cond_len), cfg_.pad_id);

    Ptr x = g.add(g.gather_rows(emb_, ids), pos_);
    for (const auto& b : blocks_) {
        Ptr h = g.layernorm(x, b.ln1_g, b.ln1_b);
        x = g.add(x, multihead_attention(g, h, h, cfg_.n_heads, b.wq, b.wk, b.wv, b.wo));
        Ptr m = g.layernorm(x, b.ln2_g, b.ln2_b);
        m = g.linear(m, b.w1, b.b1);
        m = g.gelu(m);
        m = g.linear(m, b.w2, b.b2);
        x = g.add(x, m);
    }
    return g.layernorm(x, lnf_g_, lnf_b_);
}

Ptr CaptionEncoder::encode_text(Graph& g, const vocab::Vocabulary& v,
                                const std::string& caption) const {
    return encode_ids(g, vocab::encode(v, caption).ids);
}

}  // namespace voken::diffusion
