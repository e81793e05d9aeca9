#pragma once

#include "voken/core/graph.hpp"
#include "voken/core/params.hpp"
#include "voken/core/rng.hpp"

namespace voken::diffusion {

struct UNetConfig {
    int in_channels = 3;
    int base = 32;       // widths: base, 2*base, 4*base
    int cond_dim = 64;   // cross-attention memory width
    int temb_dim = 128;  // time embedding after the MLP
    int gn_groups = 8;
    int image_px = 32;
};

// Epsilon-prediction network: two stride-2 down levels, a bottleneck and two
// up levels with skip concatenation; every level carries one cross-attention
// block over the mapped condition; sinusoidal timestep embedding injected
// per residual block.
class UNet {
public:
    UNet(const UNetConfig& cfg, ParamStore& store, Rng& rng);

    const UNetConfig& config() const { return cfg_; }

    // z: [3,H,W], cond: [L, cond_dim]; returns predicted noise [3,H,W]
    Ptr forward(Graph& g, const Ptr& z, int t, const Ptr& cond) const;

    static constexpr const char* kGroup = "diffusion.unet";

private:
    struct ResBlock {
        Ptr gn1_g, gn1_b, w1, b1, temb_w, temb_b, gn2_g, gn2_b, w2, b2, skip_w;
        int cin = 0, cout = 0;
    };
    struct CrossAttn {
        Ptr ln_g, ln_b, wq, wk, wv, wo;
    };

    ResBlock make_res(ParamStore& store, Rng& rng, const std::string& p, int cin, int cout);
    CrossAttn make_attn(ParamStore& store, Rng& rng, const std::string& p, int width);
    Ptr run_res(Graph& g, const ResBlock& rb, Ptr x, const Ptr& temb) const;
    Ptr run_attn(Graph& g, const CrossAttn& ca, Ptr x, const Ptr& cond) const;
    Ptr time_embedding(Graph& g, int t) const;

    UNetConfig cfg_;
    Ptr in_w, in_b;
    Ptr temb_w1, temb_b1, temb_w2, temb_b2;
    ResBlock rb0_, rb1_, mid_, up1_rb_, up2_rb_;
    CrossAttn ca0_, ca1_, ca_mid_, ca_up1_, ca_up2_;
    Ptr down1_w, down1_b, down2_w, down2_b;
    Ptr up1_w, up1_b, up2_w, up2_b;
    Ptr out_gn_g, out_gn_b, out_w, out_b;
};

}  // namespace voken::diffusion
