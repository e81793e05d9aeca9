#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "voken/eval/harness.hpp"
#include "voken/train/templates.hpp"
#include "voken/train/trainer.hpp"

using namespace voken;
using namespace voken::train;
namespace fs = std::filesystem;

namespace {

io::RunConfig tiny_config() {
    io::RunConfig cfg;
    cfg.set("lm.d_model", "32");
    cfg.set("lm.n_layers", "2");
    cfg.set("lm.context_length", "160");
    cfg.set("lm.img_tokens", "2");
    cfg.set("imgenc.k", "2");
    cfg.set("imgenc.feat_dim", "16");
    cfg.set("vocab.n_vokens", "4");
    cfg.set("mapper.cond_len", "8");
    cfg.set("mapper.cond_dim", "16");
    cfg.set("mapper.mlp_hidden", "32");
    cfg.set("mapper.enc_dec_layers", "2");
    cfg.set("diffusion.T", "20");
    cfg.set("diffusion.base", "8");
    cfg.set("diffusion.temb_dim", "32");
    cfg.set("diffusion.tau_layers", "1");
    cfg.set("trainer.uas_steps", "3");
    cfg.set("trainer.uas_batch", "4");
    cfg.set("trainer.uas_lr", "1e-3");
    cfg.set("trainer.mls_steps", "3");
    cfg.set("trainer.mls_batch", "3");
    cfg.set("trainer.stage0_lm_steps", "3");
    cfg.set("trainer.stage0_lm_batch", "4");
    cfg.set("trainer.stage0_diff_steps", "3");
    cfg.set("trainer.stage0_diff_batch", "3");
    cfg.set("trainer.stage0_imgenc_steps", "3");
    cfg.set("trainer.stage0_imgenc_batch", "4");
    return cfg;
}

struct Fixture {
    std::string dir;
    io::RunConfig cfg = tiny_config();
    vocab::Vocabulary vocab;

    Fixture() {
        dir = (fs::temp_directory_path() / "voken_trainer_test").string();
        fs::remove_all(dir);
        synth::export_corpus(synth::CorpusKind::pairs, 30, 9, dir + "/pairs");
        synth::export_corpus(synth::CorpusKind::stories, 8, 9, dir + "/stories");
        synth::export_corpus(synth::CorpusKind::dialogs, 8, 9, dir + "/dialogs");
        vocab = vocab::add_vokens(
            vocab::build_vocab({dir + "/pairs", dir + "/stories", dir + "/dialogs"},
                               template_lexicon()),
            4);
    }
    ~Fixture() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("sample building: masks, targets, voken positions") {
    Fixture fx;
    auto pipe = Pipeline::build(fx.cfg, fx.vocab);
    Trainer trainer(*pipe);

    const auto data = load_corpus_data(fx.dir + "/pairs", fx.vocab);
    const RawSample raw = uas_sample(fx.vocab, data[0].steps[0]);
    const auto b = trainer.build(raw);

    // supervision covers exactly the voken block plus the stop token
    int supervised = 0;
    for (auto m : b.mask) supervised += m;
    CHECK(supervised == fx.vocab.n_vokens + 1);
    CHECK(int(b.voken_pos.size()) == fx.vocab.n_vokens);
    CHECK(b.targets.back() == fx.vocab.eos);
    CHECK(b.mask.back() == 1);

    // voken targets appear in index order
    for (int j = 0; j < fx.vocab.n_vokens; ++j) CHECK(b.voken_ids[size_t(j)] == fx.vocab.voken_id(j));
}

TEST_CASE("mls expansion covers the three templates with correct targets") {
    Fixture fx;
    const auto stories = load_corpus_data(fx.dir + "/stories", fx.vocab);
    const auto samples = expand_mls_samples(fx.vocab, stories[0]);
    REQUIRE(samples.size() == 3 * 4);  // 4 target steps, 3 templates each

    int text_only = 0, image_only = 0, multimodal = 0;
    for (const auto& s : samples) {
        switch (s.kind) {
            case TaskKind::text_only:
                ++text_only;
                // no vokens in the target
                for (int id : s.response_ids) CHECK_FALSE(fx.vocab.is_voken(id));
                CHECK(s.target_image == nullptr);
                CHECK(s.prompt_images.size() >= 1);  // target image is an input
                break;
            case TaskKind::image_only: {
                ++image_only;
                CHECK(s.response_ids == voken_block(fx.vocab));
                CHECK(s.target_image != nullptr);
                break;
            }
            case TaskKind::multimodal:
                ++multimodal;
                CHECK(s.target_image != nullptr);  // stories always have images
                break;
        }
    }
    CHECK(text_only == 4);
    CHECK(image_only == 4);
    CHECK(multimodal == 4);

    // dialogs: one-turn history only
    const auto dialogs = load_corpus_data(fx.dir + "/dialogs", fx.vocab);
    for (const auto& rec : dialogs) {
        for (size_t k = 1; k < rec.steps.size(); ++k) {
            const auto s = mls_prompt(fx.vocab, rec, k, TaskKind::multimodal);
            // history images: at most the previous turn's
            size_t prev_images = rec.steps[k - 1].has_image ? 1 : 0;
            size_t tgt_extra = 0;  // multimodal prompt never includes the target image
            CHECK(s.prompt_images.size() == prev_images + tgt_extra);
        }
    }
}

TEST_CASE("uas: loss composition, freezing, determinism") {
    Fixture fx;
    auto run = [&](uint64_t seed) {
        auto cfg = fx.cfg;
        cfg.set("trainer.seed", std::to_string(seed));
        auto pipe = Pipeline::build(cfg, fx.vocab);
        Trainer trainer(*pipe);
        const auto m = trainer.train_uas(fx.dir + "/pairs");
        return std::make_pair(std::move(pipe), m);
    };

    auto [pipe1, m1] = run(0);
    // composition: total equals the lambda-weighted sum of component means
    const double recomposed = 0.01 * m1.text_mean + 1.0 * m1.ldm_mean + 0.1 * m1.cap_mean;
    CHECK(std::fabs(m1.total - recomposed) <= 1e-6 * std::max(1.0, std::fabs(recomposed)));

    auto [pipe2, m2] = run(0);
    for (const auto& g : pipe1->store.group_names())
        CHECK(pipe1->store.group_hash(g) == pipe2->store.group_hash(g));
    CHECK(m1.total == doctest::Approx(m2.total).epsilon(1e-12));

    auto [pipe3, m3] = run(1);  // different seed diverges
    CHECK(pipe3->store.group_hash(lm::CausalLM::kGroupVokenInput) !=
          pipe1->store.group_hash(lm::CausalLM::kGroupVokenInput));
}

TEST_CASE("uas freezes pretrained/diffusion/tau/imgenc; trains vokens+mapper") {
    Fixture fx;
    auto pipe = Pipeline::build(fx.cfg, fx.vocab);
    const auto before = pipe->store.all_hashes();
    Trainer trainer(*pipe);
    trainer.train_uas(fx.dir + "/pairs");
    const auto after = pipe->store.all_hashes();

    for (const char* frozen : {lm::CausalLM::kGroupPretrained, imgenc::ImageEncoder::kGroup,
                               diffusion::UNet::kGroup, diffusion::CaptionEncoder::kGroup})
        CHECK(before.at(frozen) == after.at(frozen));
    for (const char* live :
         {lm::CausalLM::kGroupVokenInput, lm::CausalLM::kGroupVokenOutput,
          mapper::FeatureMapper::kGroupMlp, mapper::FeatureMapper::kGroupEncDec,
          mapper::FeatureMapper::kGroupQuery})
        CHECK(before.at(live) != after.at(live));
}

TEST_CASE("mls: adapter required, mlp+query frozen, tau never invoked") {
    Fixture fx;
    auto pipe = Pipeline::build(fx.cfg, fx.vocab);
    Trainer trainer(*pipe);
    CHECK_THROWS(trainer.train_mls({fx.dir + "/stories"}));  // no adapter attached

    pipe->attach_adapter_from_config();
    const auto before = pipe->store.all_hashes();
    const int64_t tau_calls = pipe->tau->encode_calls();
    const auto m = trainer.train_mls({fx.dir + "/stories", fx.dir + "/dialogs"});
    const auto after = pipe->store.all_hashes();

    CHECK(pipe->tau->encode_calls() == tau_calls);  // description-free: no caption encoding
    CHECK(m.cap_mean == 0.0);

    for (const char* frozen :
         {lm::CausalLM::kGroupPretrained, mapper::FeatureMapper::kGroupMlp,
          mapper::FeatureMapper::kGroupQuery, diffusion::UNet::kGroup,
          diffusion::CaptionEncoder::kGroup, imgenc::ImageEncoder::kGroup})
        CHECK(before.at(frozen) == after.at(frozen));
    for (const char* live :
         {lm::CausalLM::kGroupVokenInput, lm::CausalLM::kGroupVokenOutput,
          lm::CausalLM::kGroupAdapter, mapper::FeatureMapper::kGroupEncDec})
        CHECK(before.at(live) != after.at(live));

    // composition without the caption term
    const double recomposed = 0.01 * m.text_mean + 1.0 * m.ldm_mean;
    CHECK(std::fabs(m.total - recomposed) <= 1e-6 * std::max(1.0, std::fabs(recomposed)));
}

TEST_CASE("stage0 determinism: same seed, same final losses and hashes") {
    Fixture fx;
    auto run = [&] {
        auto pipe = Pipeline::build(fx.cfg, fx.vocab);
        Trainer trainer(*pipe);
        const auto ms = trainer.pretrain_stage0(fx.dir + "/pairs", {fx.dir + "/pairs"});
        return std::make_pair(std::move(pipe), ms);
    };
    auto [p1, ms1] = run();
    auto [p2, ms2] = run();
    for (size_t i = 0; i < ms1.size(); ++i)
        CHECK(std::fabs(ms1[i].total - ms2[i].total) <= 1e-6 * std::max(1.0, ms1[i].total));
    for (const auto& g : p1->store.group_names())
        CHECK(p1->store.group_hash(g) == p2->store.group_hash(g));
}

TEST_CASE("uas ablation switches alter the objective") {
    Fixture fx;
    auto pipe = Pipeline::build(fx.cfg, fx.vocab);
    Trainer trainer(*pipe);
    UasAblation no_cap;
    no_cap.use_cap = false;
    const auto m = trainer.train_uas(fx.dir + "/pairs", no_cap);
    CHECK(m.cap_mean == 0.0);
    CHECK(m.ldm_mean > 0.0);

    auto pipe2 = Pipeline::build(fx.cfg, fx.vocab);
    Trainer trainer2(*pipe2);
    UasAblation no_ldm;
    no_ldm.use_ldm = false;
    const auto m2 = trainer2.train_uas(fx.dir + "/pairs", no_ldm);
    CHECK(m2.ldm_mean == 0.0);
    CHECK(m2.cap_mean > 0.0);
}

TEST_CASE("emission eval plumbing runs on an untrained model") {
    Fixture fx;
    auto pipe = Pipeline::build(fx.cfg, fx.vocab);
    const auto holdout = load_corpus_data(fx.dir + "/stories", fx.vocab);
    const auto rates = eval::eval_emission(*pipe, holdout, 12, 8, 3);
    CHECK(rates.n_prompts > 0);
    CHECK(rates.image_only >= 0);
    CHECK(rates.image_only <= 1);
}
