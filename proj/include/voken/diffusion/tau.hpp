#pragma once

#include "voken/core/graph.hpp"
#include "voken/core/params.hpp"
#include "voken/core/rng.hpp"
#include "voken/vocab/vocab.hpp"

namespace voken::diffusion {

struct TauConfig {
    int vocab_size = 0;  // base vocabulary (no vokens)
    int cond_len = 8;    // L: output length
    int cond_dim = 64;
    int n_layers = 2;
    int n_heads = 4;
    int pad_id = 0, bos_id = 1, eos_id = 2;
};

// The generation model's text encoder: embeds a caption padded/truncated to
// L tokens and self-attends into the (L, cond_dim) condition space. Trained
// during stage 0, frozen afterwards; target of the caption loss.
class CaptionEncoder {
public:
    CaptionEncoder(const TauConfig& cfg, ParamStore& store, Rng& rng);

    const TauConfig& config() const { return cfg_; }

    Ptr encode_ids(Graph& g, const std::vector<int>& word_ids) const;
    Ptr encode_text(Graph& g, const vocab::Vocabulary& v, const std::string& caption) const;

    // encode-call counter; lets tests assert the caption loss is unreachable
    // from code paths that must be description-free
    int64_t encode_calls() const { return encode_calls_; }

    static constexpr const char* kGroup = "diffusion.tau";

private:
    struct Block {
        Ptr ln1_g, ln1_b, wq, wk, wv, wo;
        Ptr ln2_g, ln2_b, w1, b1, w2, b2;
    };
    TauConfig cfg_;
    Ptr emb_, pos_, lnf_g_, lnf_b_;
    std::vector<Block> blocks_;
    mutable int64_t encode_calls_ = 0;
};

}  // namespace voken::diffusion
