#pragma once

#include <string>
#include <vector>

#include "voken/synth/corpus.hpp"
#include "voken/vocab/vocab.hpp"

namespace voken::train {

struct LoadedStep {
    std::string text;
    std::vector<int> ids;  // encoded words, no bos/eos
    bool has_image = false;
    synth::Image image;
};

struct LoadedRecord {
    std::string id;
    std::string kind;
    std::vector<LoadedStep> steps;
};

// reads records.jsonl plus referenced images into memory and encodes texts
std::vector<LoadedRecord> load_corpus_data(const std::string& dir, const vocab::Vocabulary& v);

}  // namespace voken::train
