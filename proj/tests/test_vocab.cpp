#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "voken/synth/corpus.hpp"
#include "voken/train/templates.hpp"
#include "voken/vocab/vocab.hpp"

using namespace voken;
using namespace voken::vocab;

namespace {

struct CorpusFixture {
    std::string dir;
    CorpusFixture() {
        namespace fs = std::filesystem;
        dir = (fs::temp_directory_path() / "voken_vocab_test").string();
        fs::remove_all(dir);
        synth::export_corpus(synth::CorpusKind::pairs, 200, 3, dir);
    }
    ~CorpusFixture() { std::filesystem::remove_all(dir); }
};

}  // namespace

TEST_CASE("tokenize splits glued specials and vokens") {
    auto t = tokenize("<Img><ImageHere></Img> hello [IMG1][IMG2]");
    REQUIRE(t.size() == 6);
    CHECK(t[0] == "<Img>");
    CHECK(t[1] == "<ImageHere>");
    CHECK(t[2] == "</Img>");
    CHECK(t[3] == "hello");
    CHECK(t[4] == "[IMG1]");
    CHECK(t[5] == "[IMG2]");
}

TEST_CASE("build_vocab: contents, determinism, closed-grammar size") {
    CorpusFixture fx;
    const Vocabulary v = build_vocab({fx.dir}, train::template_lexicon());
    for (const char* w : {"a", "red", "circle", "row", "col", "and"}) CHECK(v.index.count(w));
    CHECK(v.index.count("<Img>"));
    CHECK(v.index.at("<pad>") == 0);

    const Vocabulary v2 = build_vocab({fx.dir}, train::template_lexicon());
    CHECK(v.tokens == v2.tokens);

    CHECK(v.size() < 100);  // closed grammar stays tiny

    CHECK_THROWS(build_vocab({}));
}

TEST_CASE("add_vokens appends a contiguous tail block") {
    CorpusFixture fx;
    const Vocabulary base = build_vocab({fx.dir});
    const Vocabulary v8 = add_vokens(base, 8);
    CHECK(v8.n_vokens == 8);
    CHECK(v8.size() == base.size() + 8);
    for (int i = 0; i < base.size(); ++i) CHECK(v8.tokens[size_t(i)] == base.tokens[size_t(i)]);
    CHECK(v8.voken_id(7) - v8.voken_id(0) == 7);  // contiguity
    CHECK(v8.voken_id(0) == base.size());

    const Vocabulary v1 = add_vokens(base, 1);
    CHECK(v1.voken_id(0) == base.size());

    CHECK(encode(v8, "[IMG3]").ids[0] == base.size() + 2);

    CHECK_THROWS(add_vokens(base, 0));
    CHECK_THROWS(add_vokens(v8, 4));
}

TEST_CASE("encode/decode round trip and voken positions") {
    CorpusFixture fx;
    const Vocabulary v = add_vokens(build_vocab({fx.dir}), 8);

    const std::string text = "a red circle at row 0 col 0";
    const TokenSequence seq = encode(v, text);
    CHECK(decode(v, seq.ids) == text);

    const TokenSequence vk = encode(v, "[IMG1][IMG2]");
    REQUIRE(vk.ids.size() == 2);
    CHECK(vk.voken_positions == std::vector<int>{0, 1});
    CHECK(decode(v, vk.ids) == "[IMG1] [IMG2]");

    const TokenSequence slot = encode(v, "<Img><ImageHere></Img>");
    CHECK(slot.image_slots == std::vector<int>{1});

    CHECK_THROWS_WITH_AS(encode(v, "a purple circle"), doctest::Contains("purple"),
                         std::runtime_error);

    // 1000 random captions round-trip exactly
    for (uint64_t s = 0; s < 1000; ++s) {
        const std::string c = synth::caption(synth::gen_scene(s * 13 + 1, 3));
        CHECK(decode(v, encode(v, c).ids) == c);
    }
}

TEST_CASE("vocab save/load round trip") {
    CorpusFixture fx;
    const Vocabulary v = add_vokens(build_vocab({fx.dir}, train::template_lexicon()), 4);
    const std::string path = fx.dir + "/vocab.txt";
    save_vocab(v, path);
    const Vocabulary back = load_vocab(path);
    CHECK(back.tokens == v.tokens);
    CHECK(back.n_vokens == v.n_vokens);
    CHECK(back.index.at("[IMG4]") == v.size() - 1);
}
