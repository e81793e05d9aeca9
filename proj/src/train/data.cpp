#include "voken/train/data.hpp"

namespace voken::train {

std::vector<LoadedRecord> load_corpus_data(const std::string& dir, const vocab::Vocabulary& v) {
    std::vector<LoadedRecord> out;
    for (const auto& rec : synth::load_corpus(dir)) {
        LoadedRecord lr;
        lr.id = rec.id;
        lr.kind = rec.kind;
        for (const auto& step : rec.steps) {
            LoadedStep ls;
            ls.text = step.text;
            ls.ids = vocab::encode(v, step.text).ids;
            if (!step.image_path.empty()) {
                ls.has_image = true;
                ls.image = synth::load_step_image(dir, step);
            }
            lr.steps.push_back(std::move(ls));
        }
        out.push_back(std::move(lr));
    }
    return out;
}

}  // namespace voken::train
