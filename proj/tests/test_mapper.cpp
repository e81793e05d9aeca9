#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "voken/mapper/mapper.hpp"
#include "voken/train/optim.hpp"

using namespace voken;
using namespace voken::mapper;

TEST_CASE("map output shape is (L, cond_dim) independent of n") {
    Rng rng(0);
    for (int n : {1, 8, 16}) {
        MapperConfig cfg;
        cfg.n = n;
        ParamStore store;
        FeatureMapper m(cfg, store, rng);
        Graph g(false);
        Ptr h = make_tensor({n, cfg.d}, false);
        h->fill_normal(rng, 1);
        Ptr out = m.map(g, h);
        CHECK(out->shape == Shape{8, 64});
    }
}

TEST_CASE("map rejects shape mismatch") {
    Rng rng(1);
    MapperConfig cfg;
    ParamStore store;
    FeatureMapper m(cfg, store, rng);
    Graph g(false);
    CHECK_THROWS(m.map(g, make_tensor({cfg.n + 1, cfg.d}, false)));
    CHECK_THROWS(m.map(g, make_tensor({cfg.n, cfg.d - 1}, false)));
}

TEST_CASE("map_null equals map(zeros) bit-exactly and is deterministic") {
    Rng rng(2);
    MapperConfig cfg;
    ParamStore store;
    FeatureMapper m(cfg, store, rng);
    Graph g(false);
    Ptr a = m.map_null(g);
    Ptr b = m.map(g, g.zeros({cfg.n, cfg.d}));
    Ptr c = m.map_null(g);
    for (int64_t i = 0; i < a->size(); ++i) {
        CHECK(a->v[size_t(i)] == b->v[size_t(i)]);
        CHECK(a->v[size_t(i)] == c->v[size_t(i)]);
    }
}

TEST_CASE("map_null changes after an update to the enc-dec parameters") {
    Rng rng(3);
    MapperConfig cfg;
    ParamStore store;
    FeatureMapper m(cfg, store, rng);
    Graph g0(false);
    const std::vector<real> before = m.map_null(g0)->v;

    store.zero_grad();
    Graph g;
    Ptr h = make_tensor({cfg.n, cfg.d}, false);
    h->fill_normal(rng, 1);
    Ptr loss = g.mse(m.map(g, h), g.zeros({cfg.cond_len, cfg.cond_dim}));
    g.backward(loss);
    train::AdamW opt({real(1e-2)});
    opt.step(store.trainable_entries());

    Graph g1(false);
    const std::vector<real> after = m.map_null(g1)->v;
    bool differs = false;
    for (size_t i = 0; i < before.size(); ++i) differs |= before[i] != after[i];
    CHECK(differs);
}

TEST_CASE("map is a pure deterministic function of inputs and parameters") {
    Rng rng(4);
    MapperConfig cfg;
    cfg.n = 4;
    ParamStore store;
    FeatureMapper m(cfg, store, rng);
    Ptr h = make_tensor({cfg.n, cfg.d}, false);
    h->fill_normal(rng, 1);
    Graph g(false);
    const std::vector<real> a = m.map(g, h)->v;
    const std::vector<real> b = m.map(g, h)->v;
    CHECK(a == b);
}

TEST_CASE("mapper parameter groups split mlp / encdec / query") {
    Rng rng(5);
    MapperConfig cfg;
    ParamStore store;
    FeatureMapper m(cfg, store, rng);
    CHECK(store.has_group(FeatureMapper::kGroupMlp));
    CHECK(store.has_group(FeatureMapper::kGroupEncDec));
    CHECK(store.has_group(FeatureMapper::kGroupQuery));
    CHECK(store.group_numel(FeatureMapper::kGroupQuery) == cfg.cond_len * cfg.cond_dim);

    // freezing mlp+query (the MLS setup) leaves them bit-identical while
    // encdec learns
    store.set_trainable(FeatureMapper::kGroupMlp, false);
    store.set_trainable(FeatureMapper::kGroupQuery, false);
    const auto h_mlp = store.group_hash(FeatureMapper::kGroupMlp);
    const auto h_q = store.group_hash(FeatureMapper::kGroupQuery);
    const auto h_ed = store.group_hash(FeatureMapper::kGroupEncDec);

    train::AdamW opt({real(1e-2)});
    for (int i = 0; i < 3; ++i) {
        store.zero_grad();
        Graph g;
        Ptr h = make_tensor({cfg.n, cfg.d}, false);
        h->fill_normal(rng, 1);
        Ptr loss = g.mse(m.map(g, h), g.zeros({cfg.cond_len, cfg.cond_dim}));
        g.backward(loss);
        opt.step(store.trainable_entries());
    }
    CHECK(store.group_hash(FeatureMapper::kGroupMlp) == h_mlp);
    CHECK(store.group_hash(FeatureMapper::kGroupQuery) == h_q);
    CHECK(store.group_hash(FeatureMapper::kGroupEncDec) != h_ed);
}
