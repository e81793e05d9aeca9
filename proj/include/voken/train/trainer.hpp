#pragma once

#include <map>
#include <unordered_map>

#include "voken/train/pipeline.hpp"
#include "voken/train/samples.hpp"

namespace voken::train {

struct StageMetrics {
    std::string stage;
    int steps = 0;
    // per-sample means over the final step's batch
    double text_mean = 0;
    double ldm_mean = 0;
    double cap_mean = 0;
    double total = 0;  // lambda-weighted sum of the means above
    std::map<std::string, double> extra;
};

// UAS ablation switches (the loss-guidance and CFG ablations)
struct UasAblation {
    bool use_cfg = true;  // condition dropout during training
    bool use_ldm = true;
    bool use_cap = true;
};

class Trainer {
public:
    explicit Trainer(Pipeline& pipe);

    // stage 0: the locally trained substitutes for the pretrained components
    StageMetrics pretrain_imgenc();
    StageMetrics pretrain_lm(const std::vector<std::string>& corpus_dirs);
    StageMetrics pretrain_diffusion(const std::string& pairs_dir);
    std::vector<StageMetrics> pretrain_stage0(const std::string& pairs_dir,
                                              const std::vector<std::string>& text_dirs);

    StageMetrics train_uas(const std::string& pairs_dir, const UasAblation& ablation = {});
    StageMetrics train_mls(const std::vector<std::string>& corpus_dirs);

    // effective-axis tensors for one raw sample (shared with evaluation)
    struct Built {
        lm::PromptSpec spec;
        std::vector<int> targets;
        std::vector<uint8_t> mask;
        std::vector<int> voken_pos;
        std::vector<int> voken_ids;
    };
    Built build(const RawSample& raw);

    // image features through the frozen encoder, cached per image
    Ptr cached_features(const synth::Image* img);

private:
    void freeze_all_except(const std::vector<std::string>& trainable);
    int derive_steps(int cfg_steps, double epochs, size_t corpus, int batch) const;

    Pipeline& pipe_;
    std::unordered_map<const synth::Image*, Ptr> feature_cache_;
};

}  // namespace voken::train
