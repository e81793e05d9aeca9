#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "voken/imgenc/encoder.hpp"

using namespace voken;
using namespace voken::imgenc;

TEST_CASE("cell_class layout") {
    synth::SceneState s;
    s.objects.push_back({synth::ObjShape::triangle, synth::ObjColor::yellow, 2, 3});
    CHECK(cell_class(s, 2, 3) == 1 + 2 * 4 + 3);
    CHECK(cell_class(s, 0, 0) == 0);
    CHECK(kCellClasses == 13);
}

TEST_CASE("encode_image shape and determinism under defaults") {
    ParamStore store;
    Rng rng(0);
    ImageEncoder enc({}, store, rng);
    const synth::Image img = synth::render(synth::gen_scene(3, 2));
    Graph g(false);
    Ptr f1 = enc.encode_image(g, img);
    CHECK(f1->shape == Shape{4, 128});
    Ptr f2 = enc.encode_image(g, img);
    CHECK(f1->v == f2->v);

    synth::Image bad;
    bad.h = 16;
    bad.w = 16;
    bad.pix.assign(size_t(3) * 16 * 16, 0.5f);
    CHECK_THROWS(enc.encode_image(g, bad));
}

TEST_CASE("same scene same features; different scenes differ in L2") {
    ParamStore store;
    Rng rng(1);
    ImageEncoder enc({}, store, rng);
    Graph g(false);
    std::set<std::string> seen;
    std::vector<std::vector<real>> feats;
    std::vector<synth::SceneState> scenes;
    for (uint64_t s = 0; scenes.size() < 1000; ++s) {
        const synth::SceneState sc = synth::gen_scene(s * 3 + 1, 2);
        if (!seen.insert(synth::caption(sc)).second) continue;
        scenes.push_back(sc);
        feats.push_back(enc.encode_image(g, synth::render(sc))->v);
    }
    // two renders of the same scene: identical
    for (int i : {0, 5, 17}) {
        const auto again = enc.encode_image(g, synth::render(scenes[size_t(i)]))->v;
        CHECK(again == feats[size_t(i)]);
    }
    // distinct scenes: nonzero distance to a reference
    for (size_t i = 1; i < feats.size(); ++i) {
        real d = 0;
        for (size_t j = 0; j < feats[i].size(); ++j) {
            const real e = feats[i][j] - feats[0][j];
            d += e * e;
        }
        CHECK(d > 0);
    }
}

TEST_CASE("classifier heads produce well-formed outputs") {
    ParamStore store;
    Rng rng(2);
    ImageEncoder enc({}, store, rng);
    const synth::Image img = synth::render(synth::gen_scene(9, 3));

    const auto probs = enc.shape_probs(img);
    REQUIRE(probs.size() == 3);
    real sum = 0;
    for (real p : probs) {
        CHECK(p >= 0);
        sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));

    const auto feats = enc.pooled_features(img);
    CHECK(feats.size() == 64);

    const auto scene = enc.classify(img);  // untrained: arbitrary but valid
    for (const auto& o : scene.objects) {
        CHECK(o.row >= 0);
        CHECK(o.row < 4);
        CHECK(o.col >= 0);
        CHECK(o.col < 4);
    }
}

TEST_CASE("probe logits shape") {
    ParamStore store;
    Rng rng(3);
    ImageEncoder enc({}, store, rng);
    Graph g(false);
    const synth::Image img = synth::render(synth::gen_scene(5, 1));
    Ptr tokens = enc.encode_image(g, img);
    CHECK(enc.probe_logits(g, tokens)->shape == Shape{16, kCellClasses});
}
