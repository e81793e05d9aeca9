#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "voken/core/types.hpp"

namespace voken::vocab {

// Word-level vocabulary over the closed grammar. Layout: specials first,
// then words (by descending frequency, ties lexicographic), then the voken
// block [IMG1]..[IMGn] as a contiguous tail.
struct Vocabulary {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, int> index;
    int pad = 0, bos = 1, eos = 2, img_open = 3, img_here = 4, img_close = 5;
    int n_vokens = 0;

    int size() const { return int(tokens.size()); }
    int base_size() const { return size() - n_vokens; }
    int voken_id(int j) const {
        require(j >= 0 && j < n_vokens, "voken index out of range");
        return base_size() + j;
    }
    bool is_voken(int id) const { return n_vokens > 0 && id >= base_size() && id < size(); }
    int voken_index(int id) const {
        require(is_voken(id), "id is not a voken");
        return id - base_size();
    }
    const std::string& str(int id) const {
        require(id >= 0 && id < size(), "token id out of range");
        return tokens[size_t(id)];
    }
    // throws with the offending word; the grammar is closed, so unknown
    // words are corpus/vocab mismatches, not UNKs
    int lookup(const std::string& word) const;
};

struct TokenSequence {
    std::vector<int> ids;
    std::vector<int> voken_positions;  // indices into ids holding voken ids
    std::vector<int> image_slots;      // indices into ids holding <ImageHere>
};

// Builds the word vocabulary from corpus record texts plus any extra texts
// (e.g. the task-template lexicon). Rejects an empty corpus.
Vocabulary build_vocab(const std::vector<std::string>& corpus_dirs,
                       const std::vector<std::string>& extra_texts = {});

Vocabulary add_vokens(const Vocabulary& base, int n);

// removes the voken tail block, recovering the base vocabulary
Vocabulary strip_vokens(const Vocabulary& v);

// Splits on whitespace; bracketed specials (<...>, [...]) glued together are
// separated, so "<Img><ImageHere></Img>" and "[IMG1][IMG2]" tokenize.
std::vector<std::string> tokenize(const std::string& text);

TokenSequence encode(const Vocabulary& v, const std::string& text);
std::string decode(const Vocabulary& v, const std::vector<int>& ids);

void save_vocab(const Vocabulary& v, const std::string& path);
Vocabulary load_vocab(const std::string& path);

}  // namespace voken::vocab
