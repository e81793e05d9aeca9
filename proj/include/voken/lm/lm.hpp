#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voken/core/graph.hpp"
#include "voken/core/params.hpp"
#include "voken/core/rng.hpp"

namespace voken::lm {

struct LMConfig {
    int d_model = 128;
    int n_layers = 4;
    int n_heads = 4;
    int context_length = 256;
    int vocab_size = 0;  // base |V|, excluding vokens
    int n_vokens = 8;
    int img_tokens = 4;  // feature tokens substituted per <ImageHere> slot
    int img_here_id = 4;

    void validate() const {
        require(d_model % n_heads == 0, "lm: d_model must be divisible by n_heads");
        require(vocab_size > 0, "lm: vocab_size not set");
        require(n_vokens >= 1, "lm: n_vokens must be >= 1");
    }
};

struct AdapterConfig {
    enum class Kind { none, lora, prefix };
    Kind kind = Kind::none;
    int lora_rank = 4;
    real lora_alpha = 8;
    int prefix_len = 8;

    static AdapterConfig lora(int rank, real alpha) {
        require(rank > 0, "lora: rank must be positive");
        return {Kind::lora, rank, alpha, 0};
    }
    static AdapterConfig prefix(int len) {
        require(len > 0, "prefix: length must be positive");
        return {Kind::prefix, 0, 0, len};
    }
};

// A prompt on the raw token axis; <ImageHere> ids consume one image feature
// block [k,d] each on the effective axis.
struct PromptSpec {
    std::vector<int> ids;
    std::vector<Ptr> image_features;
};

struct SequenceLayout {
    std::vector<int> orig_to_eff;  // raw index -> effective position
    int eff_len = 0;
};

struct ForwardResult {
    Ptr hidden;  // [T_eff, d], post final layer norm
    Ptr logits;  // [T_eff, |V| + n]
    SequenceLayout layout;
};

struct GenerateOptions {
    int max_new = 32;
    bool greedy = true;
    real temperature = 1;
    uint64_t seed = 0;
    int eos_id = 2;
};

struct GenerateResult {
    std::vector<int> ids;              // continuation only, EOS excluded
    std::vector<int> voken_positions;  // indices into ids
};

struct TextLoss {
    Ptr sum;    // negative sum of target log-probs over masked positions
    int count;  // supervised positions
    real mean;  // per-token mean, for logging
};

// Eq-style summed cross entropy over the supervised positions.
TextLoss text_loss(Graph& g, const Ptr& logits, const std::vector<int>& targets,
                   const std::vector<uint8_t>& mask);

// Decoder-only causal transformer (pre-norm, learned positions) with the
// vocabulary split into a frozen-able base table plus voken input/output
// embeddings, and optional LoRA / prefix-tuning adapters on the attention
// projections.
class CausalLM {
public:
    CausalLM(const LMConfig& cfg, ParamStore& store, Rng& rng);

    const LMConfig& config() const { return cfg_; }
    const AdapterConfig& adapter() const { return adapter_; }
    bool has_adapter() const { return adapter_.kind != AdapterConfig::Kind::none; }

    void attach_adapter(const AdapterConfig& cfg, ParamStore& store, Rng& rng);

    SequenceLayout layout(const PromptSpec& prompt) const;
    ForwardResult forward(Graph& g, const PromptSpec& prompt, bool causal = true) const;

    GenerateResult generate(const PromptSpec& prompt, const GenerateOptions& opts) const;

    // rows ordered by voken index regardless of emission order; ids must hold
    // exactly the n voken ids (voken_id_base + 0..n-1)
    Ptr extract_voken_hidden(Graph& g, const Ptr& hidden,
                             const std::vector<int>& eff_positions,
                             const std::vector<int>& ids_at_positions) const;

    // group names for partitioning
    static constexpr const char* kGroupPretrained = "lm.pretrained";
    static constexpr const char* kGroupVokenInput = "lm.voken_input";
    static constexpr const char* kGroupVokenOutput = "lm.voken_output";
    static constexpr const char* kGroupAdapter = "lm.adapter";

    ParameterPartition partition_for_stage(const std::string& stage) const;

    int voken_id_base() const { return cfg_.vocab_size; }

private:
    struct Layer {
        Ptr ln1_g, ln1_b, wq, wk, wv, wo;
        Ptr ln2_g, ln2_b, w1, b1, w2, b2;
        // lora (per projection)
        Ptr aq, bq, ak, bk, av, bv, ao, bo;
        // prefix
        Ptr pk, pv;
    };

    Ptr project(Graph& g, const Ptr& x, const Ptr& w, const Ptr& a, const Ptr& b) const;
    Ptr attention(Graph& g, const Layer& layer, const Ptr& x, bool causal) const;

    LMConfig cfg_;
    AdapterConfig adapter_;
    Ptr tok_emb_, pos_emb_, voken_in_, lnf_g_, lnf_b_, head_, voken_out_;
    std::vector<Layer> layers_;
};

}  // namespace voken::lm
