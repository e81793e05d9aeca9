#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voken/synth/story.hpp"

namespace voken::synth {

enum class CorpusKind { pairs, stories, dialogs };

const char* corpus_kind_name(CorpusKind k);
CorpusKind corpus_kind_from(const std::string& name);

struct ExportOptions {
    int max_objects = 2;  // pairs corpus
    int dialog_turns = 4;
    double p_img = 0.5;
};

struct CorpusManifest {
    int format_version = 1;
    std::string kind;
    int count = 0;
    uint64_t seed = 0;
    std::string sha256;  // of records.jsonl
};

struct CorpusStep {
    std::string text;
    std::string image_path;  // relative to the corpus dir; empty when no image
};

struct CorpusRecord {
    std::string id;
    std::string kind;
    std::vector<CorpusStep> steps;
};

// Writes <dir>/records.jsonl, <dir>/images/*.ppm and <dir>/manifest.json.
// Deterministic: same (kind, count, seed, opts) gives byte-identical records.
CorpusManifest export_corpus(CorpusKind kind, int count, uint64_t seed, const std::string& dir,
                             const ExportOptions& opts = {});

std::vector<CorpusRecord> load_corpus(const std::string& dir);
CorpusManifest load_manifest(const std::string& dir);
Image load_step_image(const std::string& dir, const CorpusStep& step);

}  // namespace voken::synth
