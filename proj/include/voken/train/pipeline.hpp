#pragma once

#include <memory>

#include "voken/diffusion/diffusion.hpp"
#include "voken/diffusion/tau.hpp"
#include "voken/imgenc/encoder.hpp"
#include "voken/io/checkpoint.hpp"
#include "voken/io/kvconfig.hpp"
#include "voken/lm/lm.hpp"
#include "voken/mapper/mapper.hpp"

namespace voken::train {

// Owns every model plus the shared parameter store. Construction order is
// fixed, so a given (config, vocabulary, seed) always produces the same
// initial parameters.
struct Pipeline {
    io::RunConfig cfg;
    vocab::Vocabulary vocab;
    ParamStore store;
    std::unique_ptr<lm::CausalLM> model;
    std::unique_ptr<imgenc::ImageEncoder> image_enc;
    std::unique_ptr<mapper::FeatureMapper> map;
    std::unique_ptr<diffusion::UNet> unet;
    std::unique_ptr<diffusion::CaptionEncoder> tau;
    diffusion::NoiseSchedule schedule;

    static std::unique_ptr<Pipeline> build(const io::RunConfig& cfg,
                                           const vocab::Vocabulary& vocab);
    static std::unique_ptr<Pipeline> load(const std::string& ckpt_dir);

    void save(const std::string& dir, const std::string& stage) const;

    void attach_adapter_from_config();
    lm::AdapterConfig adapter_config() const;

    // every group currently registered, for freeze bookkeeping
    std::vector<std::string> all_groups() const { return store.group_names(); }
};

}  // namespace voken::train
