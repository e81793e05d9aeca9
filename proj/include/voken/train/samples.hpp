#pragma once

#include "voken/lm/lm.hpp"
#include "voken/train/data.hpp"
#include "voken/train/templates.hpp"

namespace voken::train {

// One training/eval sample on the raw token axis, before embedding.
struct RawSample {
    std::vector<int> prompt_ids;  // no leading bos
    std::vector<const synth::Image*> prompt_images;
    std::vector<int> response_ids;  // no trailing eos
    const synth::Image* target_image = nullptr;
    TaskKind kind = TaskKind::multimodal;
    std::string target_text;  // response text portion, for metrics
};

// caption -> voken block (the single-pair alignment format)
RawSample uas_sample(const vocab::Vocabulary& v, const LoadedStep& step);

// story/dialog expansion into the three task templates; dialogs keep one
// previous turn of history, stories keep the full preceding sequence
std::vector<RawSample> expand_mls_samples(const vocab::Vocabulary& v, const LoadedRecord& rec);

// prompt-only variant for generation/eval: same construction, target fields
// describe the gold response
RawSample mls_prompt(const vocab::Vocabulary& v, const LoadedRecord& rec, size_t target_step,
                     TaskKind kind);

// voken block token ids [IMG1..IMGn]
std::vector<int> voken_block(const vocab::Vocabulary& v);

}  // namespace voken::train
