#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "voken/io/checkpoint.hpp"
#include "voken/io/kvconfig.hpp"
#include "voken/io/sha256.hpp"
#include "voken/synth/corpus.hpp"
#include "voken/train/pipeline.hpp"
#include "voken/train/templates.hpp"

using namespace voken;
namespace fs = std::filesystem;

namespace {

io::RunConfig tiny_config() {
    io::RunConfig cfg;
    cfg.set("lm.d_model", "32");
    cfg.set("lm.n_layers", "2");
    cfg.set("lm.context_length", "128");
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
    return cfg;
}

struct CorpusFixture {
    std::string dir;
    CorpusFixture() {
        dir = (fs::temp_directory_path() / "voken_io_test").string();
        fs::remove_all(dir);
        synth::export_corpus(synth::CorpusKind::pairs, 40, 5, dir + "/pairs");
    }
    ~CorpusFixture() { fs::remove_all(dir); }
};

std::string file_bytes_hash(const std::string& path) { return io::sha256_file(path); }

}  // namespace

TEST_CASE("run config: defaults, file parsing, unknown keys, validation") {
    io::RunConfig cfg;
    CHECK(cfg.geti("lm.d_model") == 128);
    CHECK(cfg.getf("trainer.lambda1") == doctest::Approx(0.01));
    CHECK(cfg.getb("trainer.uas_use_cfg"));
    CHECK(cfg.gets("trainer.adapter") == "lora");

    CHECK_THROWS_WITH_AS(cfg.set("nope.key", "1"), doctest::Contains("unknown config key"),
                         std::runtime_error);

    const auto path = (fs::temp_directory_path() / "voken_cfg_test.cfg").string();
    {
        std::ofstream out(path);
        out << "# comment line\n";
        out << "lm.d_model = 64\n";
        out << "trainer.lambda3 = 0.25   # trailing comment\n";
    }
    const auto loaded = io::RunConfig::from_file(path);
    CHECK(loaded.geti("lm.d_model") == 64);
    CHECK(loaded.getf("trainer.lambda3") == doctest::Approx(0.25));
    CHECK(loaded.geti("lm.n_layers") == 4);  // untouched default

    {
        std::ofstream out(path);
        out << "lm.d_model 64\n";  // missing '='
    }
    CHECK_THROWS(io::RunConfig::from_file(path));

    {
        std::ofstream out(path);
        out << "data.max_objects = 7\n";
    }
    CHECK_THROWS(io::RunConfig::from_file(path));  // range validation

    io::RunConfig bad;
    bad.set("lm.d_model", "not_a_number");
    CHECK_THROWS(bad.geti("lm.d_model"));

    // every key lands in the manifest json
    const auto j = cfg.to_json();
    CHECK(j.size() == io::RunConfig::registry().size());
    fs::remove(path);
}

TEST_CASE("checkpoint: save -> load -> save is byte-identical") {
    CorpusFixture fx;
    const auto cfg = tiny_config();
    const auto base = vocab::build_vocab({fx.dir + "/pairs"}, train::template_lexicon());
    const auto v = vocab::add_vokens(base, 4);

    auto pipe = train::Pipeline::build(cfg, v);
    const std::string ck1 = fx.dir + "/ck1";
    pipe->save(ck1, "stage0");

    auto loaded = train::Pipeline::load(ck1);
    CHECK(loaded->vocab.tokens == v.tokens);
    for (const auto& g : pipe->store.group_names())
        CHECK(loaded->store.group_hash(g) == pipe->store.group_hash(g));

    const std::string ck2 = fx.dir + "/ck2";
    loaded->save(ck2, "stage0");
    for (const auto& name : {"manifest.json", "vocab.txt", "lm.pretrained.bin",
                             "mapper.encdec.bin", "diffusion.unet.bin"})
        CHECK(file_bytes_hash(ck1 + "/" + name) == file_bytes_hash(ck2 + "/" + name));
}

TEST_CASE("checkpoint: adapter group round trip and meta") {
    CorpusFixture fx;
    auto cfg = tiny_config();
    const auto v = vocab::add_vokens(vocab::build_vocab({fx.dir + "/pairs"}), 4);
    auto pipe = train::Pipeline::build(cfg, v);
    pipe->attach_adapter_from_config();
    const std::string ck = fx.dir + "/ck_adapter";
    pipe->save(ck, "mls");

    const auto meta = io::read_checkpoint_meta(ck);
    CHECK(meta.stage == "mls");
    CHECK(meta.config.geti("lm.d_model") == 32);
    CHECK(io::checkpoint_has_group(ck, lm::CausalLM::kGroupAdapter));

    auto loaded = train::Pipeline::load(ck);
    CHECK(loaded->model->has_adapter());
    CHECK(loaded->store.group_hash(lm::CausalLM::kGroupAdapter) ==
          pipe->store.group_hash(lm::CausalLM::kGroupAdapter));
}

TEST_CASE("checkpoint: partial group loading") {
    CorpusFixture fx;
    const auto cfg = tiny_config();
    const auto v = vocab::add_vokens(vocab::build_vocab({fx.dir + "/pairs"}), 4);
    auto a = train::Pipeline::build(cfg, v);
    const std::string ck = fx.dir + "/ck_partial";
    a->save(ck, "stage0");

    // a different voken count reuses only the frozen stage-0 groups
    auto cfg2 = cfg;
    cfg2.set("vocab.n_vokens", "2");
    const auto v2 = vocab::add_vokens(vocab::strip_vokens(v), 2);
    auto b = train::Pipeline::build(cfg2, v2);
    io::load_checkpoint_groups(ck, b->store,
                               {lm::CausalLM::kGroupPretrained, imgenc::ImageEncoder::kGroup,
                                diffusion::UNet::kGroup, diffusion::CaptionEncoder::kGroup});
    CHECK(b->store.group_hash(lm::CausalLM::kGroupPretrained) ==
          a->store.group_hash(lm::CausalLM::kGroupPretrained));
    CHECK(b->store.group_hash(diffusion::UNet::kGroup) ==
          a->store.group_hash(diffusion::UNet::kGroup));
    // voken embeddings are fresh (different shapes entirely)
    CHECK(b->store.group_numel(lm::CausalLM::kGroupVokenInput) == 2 * 32);
}

TEST_CASE("checkpoint: corrupted blob is rejected by hash verification") {
    CorpusFixture fx;
    const auto cfg = tiny_config();
    const auto v = vocab::add_vokens(vocab::build_vocab({fx.dir + "/pairs"}), 4);
    auto pipe = train::Pipeline::build(cfg, v);
    const std::string ck = fx.dir + "/ck_bad";
    pipe->save(ck, "stage0");
    {
        std::fstream f(ck + "/mapper.mlp.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(64);
        const char junk = 0x5a;
        f.write(&junk, 1);
    }
    auto fresh = train::Pipeline::build(cfg, v);
    CHECK_THROWS_WITH_AS(io::load_checkpoint_params(ck, fresh->store),
                         doctest::Contains("hash mismatch"), std::invalid_argument);
}
