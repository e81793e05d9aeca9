#include "voken/train/pipeline.hpp"

namespace voken::train {

std::unique_ptr<Pipeline> Pipeline::build(const io::RunConfig& cfg,
                                          const vocab::Vocabulary& vocab) {
    cfg.validate();
    require(vocab.n_vokens == cfg.geti("vocab.n_vokens"),
            "pipeline: vocabulary voken count does not match config");
    auto p = std::make_unique<Pipeline>();
    p->cfg = cfg;
    p->vocab = vocab;
    Rng rng(uint64_t(cfg.geti64("trainer.seed")) ^ 0x9e1257u);

    lm::LMConfig lc;
    lc.d_model = cfg.geti("lm.d_model");
    lc.n_layers = cfg.geti("lm.n_layers");
    lc.n_heads = cfg.geti("lm.n_heads");
    lc.context_length = cfg.geti("lm.context_length");
    lc.vocab_size = vocab.base_size();
    lc.n_vokens = vocab.n_vokens;
    lc.img_tokens = cfg.geti("lm.img_tokens");
    lc.img_here_id = vocab.img_here;
    p->model = std::make_unique<lm::CausalLM>(lc, p->store, rng);

    imgenc::ImgEncConfig ic;
    ic.k = cfg.geti("imgenc.k");
    ic.d = lc.d_model;
    ic.feat_dim = cfg.geti("imgenc.feat_dim");
    require(ic.k == lc.img_tokens, "pipeline: imgenc.k must equal lm.img_tokens");
    p->image_enc = std::make_unique<imgenc::ImageEncoder>(ic, p->store, rng);

    mapper::MapperConfig mc;
    mc.n = vocab.n_vokens;
    mc.d = lc.d_model;
    mc.cond_len = cfg.geti("mapper.cond_len");
    mc.cond_dim = cfg.geti("mapper.cond_dim");
    mc.mlp_hidden = cfg.geti("mapper.mlp_hidden");
    mc.enc_dec_layers = cfg.geti("mapper.enc_dec_layers");
    mc.n_heads = cfg.geti("mapper.n_heads");
    mc.input_positions = cfg.getb("mapper.input_positions");
    p->map = std::make_unique<mapper::FeatureMapper>(mc, p->store, rng);

    diffusion::UNetConfig uc;
    uc.base = cfg.geti("diffusion.base");
    uc.cond_dim = mc.cond_dim;
    uc.temb_dim = cfg.geti("diffusion.temb_dim");
    uc.image_px = synth::kImagePx;
    p->unet = std::make_unique<diffusion::UNet>(uc, p->store, rng);

    diffusion::TauConfig tc;
    tc.vocab_size = vocab.base_size();
    tc.cond_len = mc.cond_len;
    tc.cond_dim = mc.cond_dim;
    tc.n_layers = cfg.geti("diffusion.tau_layers");
    tc.pad_id = vocab.pad;
    tc.bos_id = vocab.bos;
    tc.eos_id = vocab.eos;
    p->tau = std::make_unique<diffusion::CaptionEncoder>(tc, p->store, rng);

    p->schedule = diffusion::make_schedule(cfg.geti("diffusion.T"),
                                           real(cfg.getf("diffusion.beta1")),
                                           real(cfg.getf("diffusion.betaT")));
    return p;
}

lm::AdapterConfig Pipeline::adapter_config() const {
    const std::string& kind = cfg.gets("trainer.adapter");
    if (kind == "lora")
        return lm::AdapterConfig::lora(cfg.geti("trainer.lora_rank"),
                                       real(cfg.getf("trainer.lora_alpha")));
    return lm::AdapterConfig::prefix(cfg.geti("trainer.prefix_len"));
}

void Pipeline::attach_adapter_from_config() {
    if (model->has_adapter()) return;
    Rng rng(uint64_t(cfg.geti64("trainer.seed")) ^ 0xada9u);
    model->attach_adapter(adapter_config(), store, rng);
}

std::unique_ptr<Pipeline> Pipeline::load(const std::string& ckpt_dir) {
    const io::CheckpointMeta meta = io::read_checkpoint_meta(ckpt_dir);
    const vocab::Vocabulary v = io::read_checkpoint_vocab(ckpt_dir);
    auto p = build(meta.config, v);
    if (io::checkpoint_has_group(ckpt_dir, lm::CausalLM::kGroupAdapter))
        p->attach_adapter_from_config();
    io::load_checkpoint_params(ckpt_dir, p->store);
    return p;
}

void Pipeline::save(const std::string& dir, const std::string& stage) const {
    io::save_checkpoint(dir, stage, cfg, store, vocab);
}

}  // namespace voken::train
