#include "voken/imgenc/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "voken/kernels/kernels.hpp"

namespace voken::imgenc {

ImageEncoder::ImageEncoder(const ImgEncConfig& cfg, ParamStore& store, Rng& rng) : cfg_(cfg) {
    const real sd = real(0.05);
    auto mk = [&](const char* name, Shape shape, real s = real(0.05)) {
        Ptr t = store.create(kGroup, name, std::move(shape));
        if (s > 0) t->fill_normal(rng, s);
        return t;
    };
    c1_w = mk("c1.w", {16, 3, 3, 3}, sd);
    c1_b = mk("c1.b", {16}, 0);
    c2_w = mk("c2.w", {32, 16, 3, 3}, sd);
    c2_b = mk("c2.b", {32}, 0);
    c3_w = mk("c3.w", {cfg_.feat_dim, 32, 3, 3}, sd);
    c3_b = mk("c3.b", {cfg_.feat_dim}, 0);
    cell_w = mk("cell.w", {cfg_.feat_dim, kCellClasses}, sd);
    cell_b = mk("cell.b", {kCellClasses}, 0);
    shape_w = mk("shape.w", {cfg_.feat_dim, synth::kNumShapes}, sd);
    shape_b = mk("shape.b", {synth::kNumShapes}, 0);
    queries_ = mk("pool.q", {cfg_.k, cfg_.feat_dim}, sd);
    key_w = mk("pool.kw", {cfg_.feat_dim, cfg_.feat_dim}, sd);
    val_w = mk("pool.vw", {cfg_.feat_dim, cfg_.feat_dim}, sd);
    out_w = mk("pool.ow", {cfg_.feat_dim, cfg_.d}, sd);
    out_b = mk("pool.ob", {cfg_.d}, 0);
    probe_w = mk("probe.w", {cfg_.k * cfg_.d, 16 * kCellClasses}, real(0.02));
    probe_b = mk("probe.b", {16 * kCellClasses}, 0);
}

ImageEncoder::Trunk ImageEncoder::trunk(Graph& g, const Ptr& img) const {
    require(img->shape == Shape{3, synth::kImagePx, synth::kImagePx},
            "imgenc: expected [3,32,32] input, got " + shape_str(img->shape));
    Ptr x = g.silu(g.conv2d(img, c1_w, c1_b, 2, 1));   // [16,16,16]
    x = g.silu(g.conv2d(x, c2_w, c2_b, 2, 1));         // [32,8,8]
    x = g.silu(g.conv2d(x, c3_w, c3_b, 2, 1));         // [feat,4,4]
    Trunk t;
    t.feat_map = x;
    t.rows = g.chw_to_rows(x);  // [16, feat]
    // global average pool
    Ptr ones = g.constant({1, 16}, std::vector<real>(16, real(1.0 / 16.0)));
    t.pooled = g.matmul(ones, t.rows);
    return t;
}

Ptr ImageEncoder::cell_logits(Graph& g, const Trunk& t) const {
    return g.linear(t.rows, cell_w, cell_b);
}

Ptr ImageEncoder::shape_logits(Graph& g, const Trunk& t) const {
    return g.linear(t.pooled, shape_w, shape_b);
}

Ptr ImageEncoder::lm_tokens(Graph& g, const Trunk& t) const {
    Ptr keys = g.matmul(t.rows, key_w);
    Ptr vals = g.matmul(t.rows, val_w);
    const real s = real(1) / std::sqrt(real(cfg_.feat_dim));
    Ptr att = g.softmax_rows(g.scale(g.matmul_nt(queries_, keys), s));  // [k,16]
    return g.linear(g.matmul(att, vals), out_w, out_b);                 // [k,d]
}

Ptr ImageEncoder::probe_logits(Graph& g, const Ptr& tokens) const {
    Ptr flat = g.reshape(tokens, {1, cfg_.k * cfg_.d});
    Ptr logits = g.linear(flat, probe_w, probe_b);       // [1, 16*classes]
    return g.reshape(logits, {16, kCellClasses});
}

Ptr ImageEncoder::encode_image(Graph& g, const synth::Image& img) const {
    return lm_tokens(g, trunk(g, image_constant(g, img)));
}

std::vector<real> ImageEncoder::pooled_features(const synth::Image& img) const {
    Graph g(false);
    const Trunk t = trunk(g, image_constant(g, img));
    return t.pooled->v;
}

std::vector<real> ImageEncoder::shape_probs(const synth::Image& img) const {
    Graph g(false);
    const Trunk t = trunk(g, image_constant(g, img));
    Ptr logits = shape_logits(g, t);
    std::vector<real> p = logits->v;
    kernels::softmax_rows(p.data(), 1, synth::kNumShapes);
    return p;
}

synth::SceneState ImageEncoder::classify(const synth::Image& img) const {
    Graph g(false);
    const Trunk t = trunk(g, image_constant(g, img));
    Ptr logits = cell_logits(g, t);
    synth::SceneState scene;
    for (int cell = 0; cell < 16; ++cell) {
        const real* row = &logits->v[size_t(cell) * kCellClasses];
        const int cls = int(std::max_element(row, row + kCellClasses) - row);
        if (cls == 0) continue;
        synth::SceneObject o;
        o.shape = synth::ObjShape((cls - 1) / synth::kNumColors);
        o.color = synth::ObjColor((cls - 1) % synth::kNumColors);
        o.row = cell / synth::kGrid;
        o.col = cell % synth::kGrid;
        scene.objects.push_back(o);
    }
    scene.normalize();
    return scene;
}

}  // namespace voken::imgenc
