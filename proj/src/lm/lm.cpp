#include "voken/lm/lm.hpp"

#include <algorithm>
#include <cmath>

#include "voken/kernels/kernels.hpp"

namespace voken::lm {

CausalLM::CausalLM(const LMConfig& cfg, ParamStore& store, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    const int d = cfg_.d_model;
    const real sd = real(0.02);

    auto base = [&](const std::string& name, Shape shape) {
        return store.create(kGroupPretrained, name, std::move(shape));
    };
    tok_emb_ = base("tok_emb", {cfg_.vocab_size, d});
    tok_emb_->fill_normal(rng, sd);
    pos_emb_ = base("pos_emb", {cfg_.context_length, d});
    pos_emb_->fill_normal(rng, sd);
    for (int l = 0; l < cfg_.n_layers; ++l) {
        Layer lay;
        const std::string p = "block" + std::to_string(l) + ".";
        lay.ln1_g = base(p + "ln1.g", {d});
        lay.ln1_g->fill(1);
        lay.ln1_b = base(p + "ln1.b", {d});
        lay.wq = base(p + "wq", {d, d});
        lay.wq->fill_normal(rng, sd);
        lay.wk = base(p + "wk", {d, d});
        lay.wk->fill_normal(rng, sd);
        lay.wv = base(p + "wv", {d, d});
        lay.wv->fill_normal(rng, sd);
        lay.wo = base(p + "wo", {d, d});
        lay.wo->fill_normal(rng, sd);
        lay.ln2_g = base(p + "ln2.g", {d});
        lay.ln2_g->fill(1);
        lay.ln2_b = base(p + "ln2.b", {d});
        lay.w1 = base(p + "mlp.w1", {d, 4 * d});
        lay.w1->fill_normal(rng, sd);
        lay.b1 = base(p + "mlp.b1", {4 * d});
        lay.w2 = base(p + "mlp.w2", {4 * d, d});
        lay.w2->fill_normal(rng, sd);
        lay.b2 = base(p + "mlp.b2", {d});
        layers_.push_back(std::move(lay));
    }
    lnf_g_ = base("lnf.g", {d});
    lnf_g_->fill(1);
    lnf_b_ = base("lnf.b", {d});
    head_ = base("head", {d, cfg_.vocab_size});  // zero init: uniform logits at start

    voken_in_ = store.create(kGroupVokenInput, "voken_emb", {cfg_.n_vokens, d});
    voken_in_->fill_normal(rng, sd);
    voken_out_ = store.create(kGroupVokenOutput, "voken_head", {d, cfg_.n_vokens});
}

void CausalLM::attach_adapter(const AdapterConfig& acfg, ParamStore& store, Rng& rng) {
    require(!has_adapter(), "adapter already attached");
    require(acfg.kind != AdapterConfig::Kind::none, "attach_adapter: no adapter kind");
    const int d = cfg_.d_model;
    adapter_ = acfg;
    for (size_t l = 0; l < layers_.size(); ++l) {
        const std::string p = "block" + std::to_string(l) + ".";
        auto& lay = layers_[l];
        if (acfg.kind == AdapterConfig::Kind::lora) {
            const int r = acfg.lora_rank;
            auto mk = [&](const char* nm, Ptr& a, Ptr& b) {
                a = store.create(kGroupAdapter, p + nm + std::string(".a"), {d, r});
                a->fill_normal(rng, real(0.02));
                // B zero-initialized: adapter contributes exactly zero at attach time
                b = store.create(kGroupAdapter, p + nm + std::string(".b"), {r, d});
            };
            mk("wq", lay.aq, lay.bq);
            mk("wk", lay.ak, lay.bk);
            mk("wv", lay.av, lay.bv);
            mk("wo", lay.ao, lay.bo);
        } else {
            lay.pk = store.create(kGroupAdapter, p + "prefix.k", {acfg.prefix_len, d});
            lay.pk->fill_normal(rng, real(0.02));
            lay.pv = store.create(kGroupAdapter, p + "prefix.v", {acfg.prefix_len, d});
            lay.pv->fill_normal(rng, real(0.02));
        }
    }
}

SequenceLayout CausalLM::layout(const PromptSpec& prompt) const {
    SequenceLayout lo;
    int eff = 0;
    size_t img = 0;
    for (int id : prompt.ids) {
        lo.orig_to_eff.push_back(eff);
        if (id == cfg_.img_here_id) {
            ++img;
            eff += cfg_.img_tokens;
        } else {
            eff += 1;
        }
    }
    require(img == prompt.image_features.size(),
            "prompt: image slot count does not match attached features");
    lo.eff_len = eff;
    return lo;
}

Ptr CausalLM::project(Graph& g, const Ptr& x, const Ptr& w, const Ptr& a, const Ptr& b) const {
    Ptr y = g.matmul(x, w);
    if (a) {
        const real s = adapter_.lora_alpha / real(adapter_.lora_rank);
        y = g.add(y, g.scale(g.matmul(g.matmul(x, a), b), s));
    }
    return y;
}

Ptr CausalLM::attention(Graph& g, const Layer& layer, const Ptr& x, bool causal) const {
    const int t = x->rows();
    const int d = cfg_.d_model;
    const int nh = cfg_.n_heads;
    const int dh = d / nh;
    const int p = layer.pk ? adapter_.prefix_len : 0;

    Ptr q = project(g, x, layer.wq, layer.aq, layer.bq);
    Ptr k = project(g, x, layer.wk, layer.ak, layer.bk);
    Ptr v = project(g, x, layer.wv, layer.av, layer.bv);
    if (layer.pk) {
        k = g.vconcat({layer.pk, k});  // prefix rows attendable from every position
        v = g.vconcat({layer.pv, v});
    }

    Ptr mask;
    if (causal) {
        std::vector<real> m(size_t(t) * (p + t), real(0));
        for (int i = 0; i < t; ++i)
            for (int j = i + 1; j < t; ++j) m[size_t(i) * (p + t) + p + j] = real(-1e9);
        mask = g.constant({t, p + t}, std::move(m));
    }

    std::vector<Ptr> heads;
    const real s = real(1) / std::sqrt(real(dh));
    for (int h = 0; h < nh; ++h) {
        Ptr qh = g.slice_cols(q, h * dh, dh);
        Ptr kh = g.slice_cols(k, h * dh, dh);
        Ptr vh = g.slice_cols(v, h * dh, dh);
        Ptr scores = g.scale(g.matmul_nt(qh, kh), s);
        if (mask) scores = g.add(scores, mask);
        heads.push_back(g.matmul(g.softmax_rows(scores), vh));
    }
    return project(g, g.hconcat(heads), layer.wo, layer.ao, layer.bo);
}

ForwardResult CausalLM::forward(Graph& g, const PromptSpec& prompt, bool causal) const {
    const SequenceLayout lo = layout(prompt);
    require(lo.eff_len >= 1, "forward: empty prompt");
    require(lo.eff_len <= cfg_.context_length,
            "forward: prompt length " + std::to_string(lo.eff_len) + " exceeds context_length " +
                std::to_string(cfg_.context_length));

    // interleave text embeddings and image feature blocks
    Ptr table = g.vconcat({tok_emb_, voken_in_});
    std::vector<Ptr> parts;
    std::vector<int> pending;
    size_t img = 0;
    auto flush = [&] {
        if (!pending.empty()) {
            parts.push_back(g.gather_rows(table, pending));
            pending.clear();
        }
    };
    for (int id : prompt.ids) {
        require(id >= 0 && id < cfg_.vocab_size + cfg_.n_vokens, "forward: token id out of range");
        if (id == cfg_.img_here_id) {
            flush();
            const Ptr& feat = prompt.image_features[img++];
            require(feat->shape == Shape{cfg_.img_tokens, cfg_.d_model},
                    "forward: image features must be [k,d]");
            parts.push_back(feat);
        } else {
            pending.push_back(id);
        }
    }
    flush();
    Ptr x = parts.size() == 1 ? parts[0] : g.vconcat(parts);
    x = g.add(x, g.slice_rows(pos_emb_, 0, lo.eff_len));

    for (const auto& layer : layers_) {
        Ptr h = g.layernorm(x, layer.ln1_g, layer.ln1_b);
        x = g.add(x, attention(g, layer, h, causal));
        Ptr m = g.layernorm(x, layer.ln2_g, layer.ln2_b);
        m = g.linear(m, layer.w1, layer.b1);
        m = g.gelu(m);
        m = g.linear(m, layer.w2, layer.b2);
        x = g.add(x, m);
    }
    Ptr hidden = g.layernorm(x, lnf_g_, lnf_b_);
    Ptr logits = g.hconcat({g.matmul(hidden, head_), g.matmul(hidden, voken_out_)});
    return {hidden, logits, lo};
}

GenerateResult CausalLM::generate(const PromptSpec& prompt, const GenerateOptions& opts) const {
    Rng rng(opts.seed);
    PromptSpec cur = prompt;
    GenerateResult out;
    const int vocab_total = cfg_.vocab_size + cfg_.n_vokens;
    for (int step = 0; step < opts.max_new; ++step) {
        Graph g(false);
        const ForwardResult fr = forward(g, cur, true);
        const int t = fr.logits->rows();
        const real* row = &fr.logits->v[size_t(t - 1) * vocab_total];
        int next;
        if (opts.greedy) {
            next = int(std::max_element(row, row + vocab_total) - row);
        } else {
            std::vector<real> probs(row, row + vocab_total);
            const real inv_t = real(1) / std::max(opts.temperature, real(1e-6));
            for (auto& x : probs) x *= inv_t;
            kernels::softmax_rows(probs.data(), 1, vocab_total);
            real u = rng.uniform();
            next = vocab_total - 1;
            real acc = 0;
            for (int i = 0; i < vocab_total; ++i) {
                acc += probs[size_t(i)];
                if (u < acc) {
                    next = i;
                    break;
                }
            }
        }
        if (next == opts.eos_id) break;
        if (next >= voken_id_base()) out.voken_positions.push_back(int(out.ids.size()));
        out.ids.push_back(next);
        cur.ids.push_back(next);
        if (layout(cur).eff_len >= cfg_.context_length) break;
    }
    return out;
}

Ptr CausalLM::extract_voken_hidden(Graph& g, const Ptr& hidden,
                                   const std::vector<int>& eff_positions,
                                   const std::vector<int>& ids_at_positions) const {
    const int n = cfg_.n_vokens;
    require(int(eff_positions.size()) == n,
            "extract_voken_hidden: expected " + std::to_string(n) + " voken positions, got " +
                std::to_string(eff_positions.size()));
    require(ids_at_positions.size() == eff_positions.size(),
            "extract_voken_hidden: ids/positions size mismatch");
    std::vector<int> ordered(size_t(n), -1);
    for (size_t i = 0; i < eff_positions.size(); ++i) {
        const int id = ids_at_positions[i];
        require(id >= voken_id_base() && id < voken_id_base() + n,
                "extract_voken_hidden: non-voken id at voken position");
        const int j = id - voken_id_base();
        require(ordered[size_t(j)] == -1, "extract_voken_hidden: duplicate voken " +
                                              std::to_string(j + 1));
        ordered[size_t(j)] = eff_positions[i];
    }
    return g.gather_rows(hidden, ordered);
}

TextLoss text_loss(Graph& g, const Ptr& logits, const std::vector<int>& targets,
                   const std::vector<uint8_t>& mask) {
    Ptr sum = g.cross_entropy_sum(logits, targets, mask);
    int count = 0;
    for (uint8_t m : mask) count += m;
    return {sum, count, sum->v[0] / real(count)};
}

ParameterPartition CausalLM::partition_for_stage(const std::string& stage) const {
    ParameterPartition part;
    if (stage == "pretrain") {
        part.trainable_groups = {kGroupPretrained, kGroupVokenInput, kGroupVokenOutput};
        if (has_adapter()) part.trainable_groups.push_back(kGroupAdapter);
    } else if (stage == "uas") {
        part.trainable_groups = {kGroupVokenInput, kGroupVokenOutput};
        part.frozen_groups = {kGroupPretrained};
        if (has_adapter()) part.frozen_groups.push_back(kGroupAdapter);
    } else if (stage == "mls") {
        require(has_adapter(), "mls partition requires an attached adapter");
        part.trainable_groups = {kGroupVokenInput, kGroupVokenOutput, kGroupAdapter};
        part.frozen_groups = {kGroupPretrained};
    } else {
        fail("unknown stage: " + stage);
    }
    return part;
}

}  // namespace voken::lm
