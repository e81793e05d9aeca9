#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "voken/eval/metrics.hpp"
#include "voken/train/trainer.hpp"

namespace voken::eval {

struct MetricReport {
    std::string name;
    std::map<std::string, double> values;
    std::map<std::string, int64_t> counts;
    std::vector<std::string> notes;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

// conditioning family for generation evaluation
enum class Conditioning {
    caption,             // tau(caption), negative tau("")  — the stage-0 path
    voken,               // mapped voken hidden states, negative map_null()
    voken_tau_negative,  // mapped vokens, negative tau("") — the no-CFG baseline
};

struct GenEvalOptions {
    int n_samples = 200;
    int sample_steps = 25;
    real gamma = 5;       // 0 gives the unconditional baseline of the family
    uint64_t seed = 777;
    int max_objects = 2;
};

struct GenEvalResult {
    double accuracy = 0;       // oracle-parsed attribute accuracy vs target scenes
    double accuracy_text = 0;  // vs target captions (CLIP-T proxy)
    double fid = 0;            // generated vs rendered targets, pooled
    double is_score = 0;
    bool fid_shrunk = false;
    int n = 0;
};

GenEvalResult eval_generation(train::Pipeline& pipe, Conditioning mode,
                              const GenEvalOptions& opts);

// per-cell top-1 accuracy of the stage-0 attribute classifier on held-out
// renders, plus whole-scene exact-match rate
struct ClassifierEval {
    double cell_top1 = 0;
    double scene_exact = 0;
    int n = 0;
};
ClassifierEval eval_classifier(train::Pipeline& pipe, int n_images, uint64_t seed);

// voken-emission behaviour per task template on held-out prompts
struct EmissionRates {
    double image_only = 0;   // prompts whose generation contains vokens
    double multimodal = 0;
    double text_only = 0;
    double exact_block = 0;  // among emissions: exactly [IMG1..n] in order
    int n_prompts = 0;
    int n_emissions = 0;
};
EmissionRates eval_emission(train::Pipeline& pipe,
                            const std::vector<train::LoadedRecord>& holdout, int max_prompts,
                            int max_new, uint64_t seed);

// text + multimodal metrics of greedy MLS generations against gold steps
MetricReport eval_mls_text(train::Pipeline& pipe,
                           const std::vector<train::LoadedRecord>& holdout, int max_prompts,
                           uint64_t seed);

struct SweepRow {
    double x = 0;
    std::map<std::string, double> values;
};

MetricReport sweep_cfg(train::Pipeline& pipe, const std::vector<double>& scales,
                       const GenEvalOptions& base, std::vector<SweepRow>& rows);

// simple multi-series polyline chart
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<SweepRow>& rows);

}  // namespace voken::eval
