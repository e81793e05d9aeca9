#include "voken/train/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "voken/train/optim.hpp"

namespace voken::train {

Trainer::Trainer(Pipeline& pipe) : pipe_(pipe) {}

void Trainer::freeze_all_except(const std::vector<std::string>& trainable) {
    for (const auto& g : pipe_.store.group_names()) pipe_.store.set_trainable(g, false);
    for (const auto& g : trainable) pipe_.store.set_trainable(g, true);
    feature_cache_.clear();
}

int Trainer::derive_steps(int cfg_steps, double epochs, size_t corpus, int batch) const {
    if (cfg_steps > 0) return cfg_steps;
    return std::max(1, int(std::ceil(epochs * double(corpus) / double(batch))));
}

Ptr Trainer::cached_features(const synth::Image* img) {
    auto it = feature_cache_.find(img);
    if (it != feature_cache_.end()) return it->second;
    Graph g(false);
    Ptr f = pipe_.image_enc->encode_image(g, *img);
    Ptr frozen = make_tensor(f->shape, false);
    frozen->v = f->v;
    feature_cache_[img] = frozen;
    return frozen;
}

Trainer::Built Trainer::build(const RawSample& raw) {
    const auto& v = pipe_.vocab;
    Built b;
    b.spec.ids.push_back(v.bos);
    for (int id : raw.prompt_ids) b.spec.ids.push_back(id);
    const size_t response_base = b.spec.ids.size();
    for (int id : raw.response_ids) b.spec.ids.push_back(id);
    for (const auto* img : raw.prompt_images) b.spec.image_features.push_back(cached_features(img));

    const auto layout = pipe_.model->layout(b.spec);
    b.targets.assign(size_t(layout.eff_len), 0);
    b.mask.assign(size_t(layout.eff_len), 0);
    for (size_t r = 0; r < raw.response_ids.size(); ++r) {
        const size_t j = response_base + r;
        const int e = layout.orig_to_eff[j];
        b.targets[size_t(e - 1)] = b.spec.ids[j];
        b.mask[size_t(e - 1)] = 1;
        if (v.is_voken(b.spec.ids[j])) {
            b.voken_pos.push_back(e);
            b.voken_ids.push_back(b.spec.ids[j]);
        }
    }
    // the stop token is predicted from the final position
    b.targets[size_t(layout.eff_len - 1)] = v.eos;
    b.mask[size_t(layout.eff_len - 1)] = 1;
    return b;
}

StageMetrics Trainer::pretrain_imgenc() {
    const auto& cfg = pipe_.cfg;
    freeze_all_except({imgenc::ImageEncoder::kGroup});
    AdamW opt({real(cfg.getf("trainer.stage0_imgenc_lr")), real(0.9), real(0.999), real(1e-8),
               real(cfg.getf("trainer.weight_decay"))});
    const int steps = cfg.geti("trainer.stage0_imgenc_steps");
    const int batch = cfg.geti("trainer.stage0_imgenc_batch");
    Rng rng(uint64_t(cfg.geti64("trainer.seed")) ^ 0x1039e0cull);

    StageMetrics m;
    m.stage = "stage0.imgenc";
    m.steps = steps;
    const auto entries = pipe_.store.trainable_entries();
    for (int step = 0; step < steps; ++step) {
        pipe_.store.zero_grad();
        Graph g;
        Ptr total;
        for (int i = 0; i < batch; ++i) {
            const synth::SceneState scene = synth::gen_scene(rng.next_u64(), 3);
            const synth::Image img = synth::render(scene);
            const auto trunk = pipe_.image_enc->trunk(g, image_constant(g, img));

            std::vector<int> labels;
            for (int cell = 0; cell < 16; ++cell)
                labels.push_back(imgenc::cell_class(scene, cell / 4, cell % 4));
            std::vector<uint8_t> all(16, 1);
            Ptr cell_ce = g.cross_entropy_sum(pipe_.image_enc->cell_logits(g, trunk), labels, all);
            Ptr shape_ce = g.cross_entropy_sum(pipe_.image_enc->shape_logits(g, trunk),
                                               {int(scene.objects[0].shape)}, {1});
            Ptr probe_ce = g.cross_entropy_sum(
                pipe_.image_enc->probe_logits(g, pipe_.image_enc->lm_tokens(g, trunk)), labels,
                all);
            Ptr loss = g.add(g.add(g.scale(cell_ce, real(1.0 / 16)), shape_ce),
                             g.scale(probe_ce, real(1.0 / 16)));
            total = total ? g.add(total, loss) : loss;
            if (step + 1 == steps) m.text_mean += double(loss->v[0]);
        }
        total = g.scale(total, real(1) / real(batch));
        g.backward(total);
        opt.step(entries);
        if (step + 1 == steps) m.total = double(total->v[0]);
    }
    m.text_mean /= batch;
    return m;
}

StageMetrics Trainer::pretrain_lm(const std::vector<std::string>& corpus_dirs) {
    const auto& cfg = pipe_.cfg;
    auto part = pipe_.model->partition_for_stage("pretrain");
    std::vector<std::string> trainable = part.trainable_groups;
    freeze_all_except(trainable);
    AdamW opt({real(cfg.getf("trainer.stage0_lm_lr")), real(0.9), real(0.999), real(1e-8),
               real(cfg.getf("trainer.weight_decay"))});

    // plain text lines: every corpus text plus the task-template lexicon;
    // <ImageHere> placeholders are dropped (no features exist in text-only
    // pretraining; the slot is only ever substituted, never embedded)
    auto textify = [this](const std::vector<int>& ids) {
        std::vector<int> out;
        for (int id : ids)
            if (id != pipe_.vocab.img_here) out.push_back(id);
        return out;
    };
    std::vector<std::vector<int>> texts;
    for (const auto& dir : corpus_dirs)
        for (const auto& rec : load_corpus_data(dir, pipe_.vocab))
            for (const auto& step : rec.steps) texts.push_back(textify(step.ids));
    for (const auto& line : template_lexicon())
        texts.push_back(textify(vocab::encode(pipe_.vocab, line).ids));
    require(!texts.empty(), "pretrain_lm: no texts");

    const int batch = cfg.geti("trainer.stage0_lm_batch");
    const int steps = cfg.geti("trainer.stage0_lm_steps");
    Rng rng(uint64_t(cfg.geti64("trainer.seed")) ^ 0x10a9e17ull);

    StageMetrics m;
    m.stage = "stage0.lm";
    m.steps = steps;
    const auto entries = pipe_.store.trainable_entries();
    for (int step = 0; step < steps; ++step) {
        pipe_.store.zero_grad();
        Graph g;
        Ptr total;
        double text_sum = 0;
        for (int i = 0; i < batch; ++i) {
            const auto& ids = texts[size_t(rng.uniform_int(texts.size()))];
            RawSample raw;
            raw.response_ids = ids;
            Built b = build(raw);
            const auto fr = pipe_.model->forward(g, b.spec);
            Ptr loss = g.cross_entropy_sum(fr.logits, b.targets, b.mask);
            // per-token mean keeps long lines from dominating
            loss = g.scale(loss, real(1) / real(std::max<size_t>(1, ids.size() + 1)));
            total = total ? g.add(total, loss) : loss;
            text_sum += double(loss->v[0]);
        }
        total = g.scale(total, real(1) / real(batch));
        g.backward(total);
        opt.step(entries);
        if (step + 1 == steps) {
            m.text_mean = text_sum / batch;
            m.total = double(total->v[0]);
        }
    }
    return m;
}

StageMetrics Trainer::pretrain_diffusion(const std::string& pairs_dir) {
    const auto& cfg = pipe_.cfg;
    freeze_all_except({diffusion::UNet::kGroup, diffusion::CaptionEncoder::kGroup});
    AdamW opt({real(cfg.getf("trainer.stage0_diff_lr")), real(0.9), real(0.999), real(1e-8),
               real(cfg.getf("trainer.weight_decay"))});

    const auto data = load_corpus_data(pairs_dir, pipe_.vocab);
    require(!data.empty(), "pretrain_diffusion: empty pairs corpus");
    const int batch = cfg.geti("trainer.stage0_diff_batch");
    const int steps = cfg.geti("trainer.stage0_diff_steps");
    const real dropout = real(cfg.getf("trainer.cfg_dropout"));
    Rng rng(uint64_t(cfg.geti64("trainer.seed")) ^ 0x1d1ffull);

    auto denoiser = diffusion::as_denoiser(*pipe_.unet);
    diffusion::NullCondFn null_cond = [this](Graph& g) {
        return pipe_.tau->encode_ids(g, {});
    };

    StageMetrics m;
    m.stage = "stage0.diffusion";
    m.steps = steps;
    const auto entries = pipe_.store.trainable_entries();
    for (int step = 0; step < steps; ++step) {
        pipe_.store.zero_grad();
        Graph g;
        Ptr total;
        double ldm_sum = 0;
        for (int i = 0; i < batch; ++i) {
            const auto& rec = data[size_t(rng.uniform_int(data.size()))];
            const auto& s = rec.steps[0];
            Ptr z0 = image_constant(g, s.image);
            Ptr cond = pipe_.tau->encode_ids(g, s.ids);
            const auto r = diffusion::ldm_loss(g, denoiser, pipe_.schedule, z0, cond, null_cond,
                                               dropout, rng);
            total = total ? g.add(total, r.loss) : r.loss;
            ldm_sum += double(r.loss->v[0]);
        }
        total = g.scale(total, real(1) / real(batch));
        g.backward(total);
        opt.step(entries);
        if (step + 1 == steps) {
            m.ldm_mean = ldm_sum / batch;
            m.total = double(total->v[0]);
        }
    }
    return m;
}

std::vector<StageMetrics> Trainer::pretrain_stage0(const std::string& pairs_dir,
                                                   const std::vector<std::string>& text_dirs) {
    std::vector<StageMetrics> out;
    out.push_back(pretrain_imgenc());
    out.push_back(pretrain_lm(text_dirs));
    out.push_back(pretrain_diffusion(pairs_dir));
    return out;
}

StageMetrics Trainer::train_uas(const std::string& pairs_dir, const UasAblation& ablation) {
    const auto& cfg = pipe_.cfg;
    auto lm_part = pipe_.model->partition_for_stage("uas");
    std::vector<std::string> trainable = lm_part.trainable_groups;
    trainable.push_back(mapper::FeatureMapper::kGroupMlp);
    trainable.push_back(mapper::FeatureMapper::kGroupEncDec);
    trainable.push_back(mapper::FeatureMapper::kGroupQuery);
    freeze_all_except(trainable);
    AdamW opt({real(cfg.getf("trainer.uas_lr")), real(0.9), real(0.999), real(1e-8),
               real(cfg.getf("trainer.weight_decay"))});

    const auto data = load_corpus_data(pairs_dir, pipe_.vocab);
    require(!data.empty(), "train_uas: empty pairs corpus");
    const int batch = cfg.geti("trainer.uas_batch");
    const int steps = derive_steps(cfg.geti("trainer.uas_steps"),
                                   cfg.getf("trainer.uas_epochs"), data.size(), batch);
    const real lambda1 = real(cfg.getf("trainer.lambda1"));
    const real lambda2 = real(cfg.getf("trainer.lambda2"));
    const real lambda3 = real(cfg.getf("trainer.lambda3"));
    const real dropout = ablation.use_cfg ? real(cfg.getf("trainer.cfg_dropout")) : real(0);
    Rng rng(uint64_t(cfg.geti64("trainer.seed")) ^ 0x0a5ull);

    auto denoiser = diffusion::as_denoiser(*pipe_.unet);
    diffusion::NullCondFn null_cond = [this](Graph& g) { return pipe_.map->map_null(g); };

    StageMetrics m;
    m.stage = "uas";
    m.steps = steps;
    const auto entries = pipe_.store.trainable_entries();
    for (int step = 0; step < steps; ++step) {
        pipe_.store.zero_grad();
        Graph g;
        Ptr total;
        double text_sum = 0, ldm_sum = 0, cap_sum = 0;
        for (int i = 0; i < batch; ++i) {
            const auto& rec = data[size_t(rng.uniform_int(data.size()))];
            const RawSample raw = uas_sample(pipe_.vocab, rec.steps[0]);
            Built b = build(raw);
            const auto fr = pipe_.model->forward(g, b.spec);

            Ptr text = g.cross_entropy_sum(fr.logits, b.targets, b.mask);
            Ptr sample_loss = g.scale(text, lambda1);
            text_sum += double(text->v[0]);

            Ptr h = pipe_.model->extract_voken_hidden(g, fr.hidden, b.voken_pos, b.voken_ids);
            Ptr cond = pipe_.map->map(g, h);
            if (ablation.use_ldm) {
                Ptr z0 = image_constant(g, *raw.target_image);
                const auto r = diffusion::ldm_loss(g, denoiser, pipe_.schedule, z0, cond,
                                                   null_cond, dropout, rng);
                sample_loss = g.add(sample_loss, g.scale(r.loss, lambda2));
                ldm_sum += double(r.loss->v[0]);
            }
            if (ablation.use_cap) {
                Ptr target = pipe_.tau->encode_ids(g, rec.steps[0].ids);
                Ptr cap = g.mse(cond, target);
                sample_loss = g.add(sample_loss, g.scale(cap, lambda3));
                cap_sum += double(cap->v[0]);
            }
            total = total ? g.add(total, sample_loss) : sample_loss;
        }
        total = g.scale(total, real(1) / real(batch));
        g.backward(total);
        opt.step(entries);
        if (step + 1 == steps) {
            m.text_mean = text_sum / batch;
            m.ldm_mean = ldm_sum / batch;
            m.cap_mean = cap_sum / batch;
            m.total = double(lambda1) * m.text_mean + double(lambda2) * m.ldm_mean +
                      double(lambda3) * m.cap_mean;
        }
    }
    return m;
}

StageMetrics Trainer::train_mls(const std::vector<std::string>& corpus_dirs) {
    const auto& cfg = pipe_.cfg;
    require(pipe_.model->has_adapter(), "train_mls: adapter not attached (missing UAS setup)");
    auto lm_part = pipe_.model->partition_for_stage("mls");
    std::vector<std::string> trainable = lm_part.trainable_groups;
    trainable.push_back(mapper::FeatureMapper::kGroupEncDec);  // MLP and q stay fixed
    freeze_all_except(trainable);
    AdamW opt({real(cfg.getf("trainer.mls_lr")), real(0.9), real(0.999), real(1e-8),
               real(cfg.getf("trainer.weight_decay"))});

    std::vector<RawSample> samples;
    std::vector<LoadedRecord> keep_alive;
    for (const auto& dir : corpus_dirs) {
        auto recs = load_corpus_data(dir, pipe_.vocab);
        for (auto& r : recs) keep_alive.push_back(std::move(r));
    }
    for (const auto& rec : keep_alive)
        for (auto& s : expand_mls_samples(pipe_.vocab, rec)) samples.push_back(std::move(s));
    require(!samples.empty(), "train_mls: no samples");

    const int batch = cfg.geti("trainer.mls_batch");
    const int steps = derive_steps(cfg.geti("trainer.mls_steps"),
                                   cfg.getf("trainer.mls_epochs"), samples.size(), batch);
    const real lambda1 = real(cfg.getf("trainer.lambda1"));
    const real lambda2 = real(cfg.getf("trainer.lambda2"));
    const real dropout = real(cfg.getf("trainer.cfg_dropout"));
    Rng rng(uint64_t(cfg.geti64("trainer.seed")) ^ 0x315ull);

    auto denoiser = diffusion::as_denoiser(*pipe_.unet);
    diffusion::NullCondFn null_cond = [this](Graph& g) { return pipe_.map->map_null(g); };

    StageMetrics m;
    m.stage = "mls";
    m.steps = steps;
    const auto entries = pipe_.store.trainable_entries();
    for (int step = 0; step < steps; ++step) {
        pipe_.store.zero_grad();
        Graph g;
        Ptr total;
        double text_sum = 0, ldm_sum = 0;
        for (int i = 0; i < batch; ++i) {
            const RawSample& raw = samples[size_t(rng.uniform_int(samples.size()))];
            Built b = build(raw);
            const auto fr = pipe_.model->forward(g, b.spec);

            Ptr text = g.cross_entropy_sum(fr.logits, b.targets, b.mask);
            Ptr sample_loss = g.scale(text, lambda1);
            text_sum += double(text->v[0]);

            if (raw.target_image && !b.voken_pos.empty()) {
                Ptr h = pipe_.model->extract_voken_hidden(g, fr.hidden, b.voken_pos, b.voken_ids);
                Ptr cond = pipe_.map->map(g, h);
                Ptr z0 = image_constant(g, *raw.target_image);
                const auto r = diffusion::ldm_loss(g, denoiser, pipe_.schedule, z0, cond,
                                                   null_cond, dropout, rng);
                sample_loss = g.add(sample_loss, g.scale(r.loss, lambda2));
                ldm_sum += double(r.loss->v[0]);
            }
            total = total ? g.add(total, sample_loss) : sample_loss;
        }
        total = g.scale(total, real(1) / real(batch));
        g.backward(total);
        opt.step(entries);
        if (step + 1 == steps) {
            m.text_mean = text_sum / batch;
            m.ldm_mean = ldm_sum / batch;
            m.total = double(lambda1) * m.text_mean + double(lambda2) * m.ldm_mean;
        }
    }
    return m;
}

}  // namespace voken::train
