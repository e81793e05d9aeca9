#pragma once

#include "voken/core/graph.hpp"
#include "voken/core/params.hpp"
#include "voken/core/rng.hpp"

namespace voken::mapper {

struct MapperConfig {
    int n = 8;           // voken count
    int d = 128;         // LM hidden width
    int cond_len = 8;    // L: condition length (matches the caption encoder)
    int cond_dim = 64;   // d-hat: condition width
    int mlp_hidden = 256;
    int enc_dec_layers = 4;  // layers per stack
    int n_heads = 4;
    bool input_positions = true;  // learned positions on the n voken inputs

    void validate() const {
        require(cond_len >= 1, "mapper: cond_len must be >= 1");
        require(n >= 1 && d >= 1 && cond_dim >= 1, "mapper: bad dims");
    }
};

// Voken-to-condition feature mapper: a two-layer MLP lifting each of the n
// voken hidden states into the condition width, a four-layer encoder over
// them, and a four-layer decoder cross-attending from L learned queries.
// Output shape is (L, cond_dim) for any n.
class FeatureMapper {
public:
    FeatureMapper(const MapperConfig& cfg, ParamStore& store, Rng& rng);

    const MapperConfig& config() const { return cfg_; }

    // h: [n, d] voken hidden states -> [L, cond_dim]
    Ptr map(Graph& g, const Ptr& h) const;

    // map of the all-zero voken features; recomputed on every call so it
    // always reflects current parameters
    Ptr map_null(Graph& g) const;

    static constexpr const char* kGroupMlp = "mapper.mlp";
    static constexpr const char* kGroupEncDec = "mapper.encdec";
    static constexpr const char* kGroupQuery = "mapper.query";

private:
    struct Block {
        Ptr ln1_g, ln1_b, wq, wk, wv, wo;        // self attention
        Ptr lnc_g, lnc_b, cq, ck, cv, co;        // cross attention (decoder only)
        Ptr ln2_g, ln2_b, w1, b1, w2, b2;        // ffn
        bool has_cross = false;
    };
    Block make_block(ParamStore& store, Rng& rng, const std::string& prefix, bool cross);
    Ptr run_block(Graph& g, const Block& b, Ptr x, const Ptr& memory) const;

    MapperConfig cfg_;
    Ptr mlp_w1, mlp_b1, mlp_w2, mlp_b2;  // theta_MLP
    Ptr in_pos_;                         // learned input positions (enc-dec group)
    Ptr query_;                          // q: [L, cond_dim]
    Ptr lnf_g_, lnf_b_;
    std::vector<Block> enc_, dec_;
};

}  // namespace voken::mapper
