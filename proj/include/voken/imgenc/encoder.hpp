#pragma once

#include "voken/core/graph.hpp"
#include "voken/core/imageops.hpp"
#include "voken/core/params.hpp"
#include "voken/core/rng.hpp"
#include "voken/synth/scene.hpp"

namespace voken::imgenc {

// per-cell classes: 0 = empty, 1 + shape*4 + color otherwise
constexpr int kCellClasses = 1 + synth::kNumShapes * synth::kNumColors;

inline int cell_class(const synth::SceneState& s, int row, int col) {
    for (const auto& o : s.objects)
        if (o.row == row && o.col == col) return 1 + int(o.shape) * synth::kNumColors + int(o.color);
    return 0;
}

struct ImgEncConfig {
    int k = 4;          // LM feature tokens per image
    int d = 128;        // LM width
    int feat_dim = 64;  // trunk width at 4x4 (also the FID feature dimension)
};

// Three stride-2 conv blocks down to a 4x4 map (one position per grid cell),
// with an attribute head per position, a pooled shape head, and a k-query
// attention pool projecting to the LM embedding width. Trained once in stage
// 0, frozen afterwards.
class ImageEncoder {
public:
    ImageEncoder(const ImgEncConfig& cfg, ParamStore& store, Rng& rng);

    const ImgEncConfig& config() const { return cfg_; }

    struct Trunk {
        Ptr feat_map;  // [feat_dim, 4, 4]
        Ptr rows;      // [16, feat_dim]
        Ptr pooled;    // [1, feat_dim]
    };
    Trunk trunk(Graph& g, const Ptr& img) const;  // img: [3,32,32] in [-1,1]

    Ptr cell_logits(Graph& g, const Trunk& t) const;   // [16, kCellClasses]
    Ptr shape_logits(Graph& g, const Trunk& t) const;  // [1, 3]
    Ptr lm_tokens(Graph& g, const Trunk& t) const;     // [k, d]
    Ptr probe_logits(Graph& g, const Ptr& lm_tokens) const;  // [16, kCellClasses]

    // convenience inference entry points
    Ptr encode_image(Graph& g, const synth::Image& img) const;      // [k, d]
    std::vector<real> pooled_features(const synth::Image& img) const;  // FID features
    std::vector<real> shape_probs(const synth::Image& img) const;      // IS proxy input
    synth::SceneState classify(const synth::Image& img) const;         // per-cell argmax

    static constexpr const char* kGroup = "imgenc";

private:
    ImgEncConfig cfg_;
    Ptr c1_w, c1_b, c2_w, c2_b, c3_w, c3_b;
    Ptr cell_w, cell_b;
    Ptr shape_w, shape_b;
    Ptr queries_, key_w, val_w, out_w, out_b;
    Ptr probe_w, probe_b;
};

}  // namespace voken::imgenc
