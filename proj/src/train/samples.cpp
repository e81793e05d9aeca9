#include "voken/train/samples.hpp"

namespace voken::train {

std::vector<int> voken_block(const vocab::Vocabulary& v) {
    std::vector<int> ids;
    for (int j = 0; j < v.n_vokens; ++j) ids.push_back(v.voken_id(j));
    return ids;
}

RawSample uas_sample(const vocab::Vocabulary& v, const LoadedStep& step) {
    require(step.has_image, "uas_sample: pair step lacks an image");
    RawSample s;
    s.prompt_ids = step.ids;
    s.response_ids = voken_block(v);
    s.target_image = &step.image;
    s.kind = TaskKind::image_only;
    s.target_text = step.text;
    return s;
}

namespace {

void append_words(std::vector<int>& ids, const vocab::Vocabulary& v, const std::string& text) {
    for (int id : vocab::encode(v, text).ids) ids.push_back(id);
}

void append_image_slot(RawSample& s, const vocab::Vocabulary& v, const synth::Image* img) {
    s.prompt_ids.push_back(v.img_open);
    s.prompt_ids.push_back(v.img_here);
    s.prompt_ids.push_back(v.img_close);
    s.prompt_images.push_back(img);
}

// history context: previous steps' text plus image placeholders
void append_history(RawSample& s, const vocab::Vocabulary& v, const LoadedRecord& rec,
                    size_t upto, size_t max_steps) {
    const size_t first = upto > max_steps ? upto - max_steps : 0;
    for (size_t i = first; i < upto; ++i) {
        const auto& st = rec.steps[i];
        for (int id : st.ids) s.prompt_ids.push_back(id);
        if (st.has_image) append_image_slot(s, v, &st.image);
    }
}

}  // namespace

RawSample mls_prompt(const vocab::Vocabulary& v, const LoadedRecord& rec, size_t target_step,
                     TaskKind kind) {
    require(target_step >= 1 && target_step < rec.steps.size(),
            "mls_prompt: target step out of range");
    const bool is_dialog = rec.kind == "dialogs";
    const auto& tgt = rec.steps[target_step];

    RawSample s;
    s.kind = kind;
    // dialogs keep only one previous turn of history
    append_history(s, v, rec, target_step, is_dialog ? 1 : rec.steps.size());

    switch (kind) {
        case TaskKind::text_only:
            require(tgt.has_image, "text_only template needs the target image as input");
            append_words(s.prompt_ids, v, kTextOnlyInstruction);
            s.prompt_images.push_back(&tgt.image);
            s.response_ids = tgt.ids;
            break;
        case TaskKind::image_only:
            require(tgt.has_image, "image_only template needs a target image");
            append_words(s.prompt_ids, v, kImageOnlyInstruction);
            for (int id : tgt.ids) s.prompt_ids.push_back(id);
            s.response_ids = voken_block(v);
            s.target_image = &tgt.image;
            break;
        case TaskKind::multimodal:
            append_words(s.prompt_ids, v, kMultimodalInstruction);
            s.response_ids = tgt.ids;
            if (tgt.has_image) {
                for (int id : voken_block(v)) s.response_ids.push_back(id);
                s.target_image = &tgt.image;
            }
            break;
    }
    s.target_text = tgt.text;
    return s;
}

std::vector<RawSample> expand_mls_samples(const vocab::Vocabulary& v, const LoadedRecord& rec) {
    std::vector<RawSample> out;
    const bool is_dialog = rec.kind == "dialogs";
    for (size_t k = 1; k < rec.steps.size(); ++k) {
        const auto& tgt = rec.steps[k];
        if (is_dialog) {
            // the model decides whether to answer with an image
            out.push_back(mls_prompt(v, rec, k, TaskKind::multimodal));
            continue;
        }
        if (tgt.has_image) {
            out.push_back(mls_prompt(v, rec, k, TaskKind::text_only));
            out.push_back(mls_prompt(v, rec, k, TaskKind::image_only));
        }
        out.push_back(mls_prompt(v, rec, k, TaskKind::multimodal));
    }
    return out;
}

}  // namespace voken::train
