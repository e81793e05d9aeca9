#include "voken/eval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace voken::eval {

using train::Pipeline;

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["values"] = values;
    j["counts"] = counts;
    j["notes"] = notes;
    return j;
}

std::string MetricReport::to_table() const {
    std::ostringstream out;
    out << "== " << name << " ==\n";
    for (const auto& [k, v] : values) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "  %-28s %12.6f\n", k.c_str(), v);
        out << buf;
    }
    for (const auto& [k, v] : counts) out << "  " << k << " = " << v << "\n";
    for (const auto& n : notes) out << "  note: " << n << "\n";
    return out.str();
}

namespace {

uint64_t holdout_seed(uint64_t seed, int i) {
    return (seed + 0x51ceull) * 0x9e3779b97f4a7c15ULL + uint64_t(i);
}

// condition for one target through the teacher-forced voken path
Ptr voken_condition(Pipeline& pipe, Graph& g, const std::string& caption_text) {
    const auto& v = pipe.vocab;
    lm::PromptSpec spec;
    spec.ids.push_back(v.bos);
    for (int id : vocab::encode(v, caption_text).ids) spec.ids.push_back(id);
    std::vector<int> pos, ids;
    for (int j = 0; j < v.n_vokens; ++j) {
        pos.push_back(int(spec.ids.size()));
        ids.push_back(v.voken_id(j));
        spec.ids.push_back(v.voken_id(j));
    }
    const auto fr = pipe.model->forward(g, spec);
    Ptr h = pipe.model->extract_voken_hidden(g, fr.hidden, pos, ids);
    return pipe.map->map(g, h);
}

}  // namespace

GenEvalResult eval_generation(Pipeline& pipe, Conditioning mode, const GenEvalOptions& opts) {
    GenEvalResult res;
    res.n = opts.n_samples;

    std::vector<synth::SceneState> scenes;
    std::vector<std::string> captions;
    std::vector<synth::Image> refs;
    for (int i = 0; i < opts.n_samples; ++i) {
        scenes.push_back(synth::gen_scene(holdout_seed(opts.seed, i), opts.max_objects));
        captions.push_back(synth::caption(scenes.back()));
        refs.push_back(synth::render(scenes.back()));
    }

    // conditions are cheap (LM/tau); compute serially, then sample in parallel
    Graph g(false);
    std::vector<Ptr> conds(size_t(opts.n_samples));
    for (int i = 0; i < opts.n_samples; ++i)
        conds[size_t(i)] = mode == Conditioning::caption
                               ? pipe.tau->encode_text(g, pipe.vocab, captions[size_t(i)])
                               : voken_condition(pipe, g, captions[size_t(i)]);
    Ptr null_cond = mode == Conditioning::voken ? pipe.map->map_null(g)
                                                : pipe.tau->encode_ids(g, {});

    std::vector<synth::Image> gen(size_t(opts.n_samples));
    const int steps = opts.sample_steps == 0 ? pipe.schedule.T : opts.sample_steps;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < opts.n_samples; ++i) {
        diffusion::SamplerParams p;
        p.gamma = opts.gamma;
        p.steps = steps;
        p.seed = holdout_seed(opts.seed ^ 0xabcdull, i);
        p.cond = conds[size_t(i)];
        p.null_cond = null_cond;
        gen[size_t(i)] = diffusion::sample(*pipe.unet, pipe.schedule, p);
    }

    std::vector<std::vector<real>> gen_feats, ref_feats, gen_probs;
    double acc = 0, acc_text = 0;
    for (int i = 0; i < opts.n_samples; ++i) {
        acc += attribute_accuracy(gen[size_t(i)], scenes[size_t(i)]);
        acc_text += attribute_accuracy_text(gen[size_t(i)], captions[size_t(i)]);
        gen_feats.push_back(pipe.image_enc->pooled_features(gen[size_t(i)]));
        ref_feats.push_back(pipe.image_enc->pooled_features(refs[size_t(i)]));
        gen_probs.push_back(pipe.image_enc->shape_probs(gen[size_t(i)]));
    }
    res.accuracy = acc / opts.n_samples;
    res.accuracy_text = acc_text / opts.n_samples;
    res.fid = fid_proxy(gen_feats, ref_feats, &res.fid_shrunk);
    res.is_score = is_proxy(gen_probs);
    return res;
}

ClassifierEval eval_classifier(Pipeline& pipe, int n_images, uint64_t seed) {
    ClassifierEval res;
    res.n = n_images;
    int64_t cells_ok = 0, cells = 0;
    int scenes_ok = 0;
    for (int i = 0; i < n_images; ++i) {
        const synth::SceneState scene = synth::gen_scene(holdout_seed(seed ^ 0xc1a55ull, i), 3);
        const synth::SceneState pred = pipe.image_enc->classify(synth::render(scene));
        for (int cell = 0; cell < 16; ++cell) {
            const int want = imgenc::cell_class(scene, cell / 4, cell % 4);
            const int got = imgenc::cell_class(pred, cell / 4, cell % 4);
            cells_ok += want == got;
            ++cells;
        }
        scenes_ok += pred == scene;
    }
    res.cell_top1 = double(cells_ok) / double(cells);
    res.scene_exact = double(scenes_ok) / double(n_images);
    return res;
}

namespace {

bool contains_voken(const vocab::Vocabulary& v, const std::vector<int>& ids) {
    for (int id : ids)
        if (v.is_voken(id)) return true;
    return false;
}

bool exact_voken_block(const vocab::Vocabulary& v, const std::vector<int>& ids) {
    std::vector<size_t> pos;
    for (size_t i = 0; i < ids.size(); ++i)
        if (v.is_voken(ids[i])) pos.push_back(i);
    if (int(pos.size()) != v.n_vokens) return false;
    for (int j = 0; j < v.n_vokens; ++j) {
        if (ids[pos[size_t(j)]] != v.voken_id(j)) return false;           // in order
        if (j > 0 && pos[size_t(j)] != pos[size_t(j - 1)] + 1) return false;  // consecutive
    }
    return true;
}

}  // namespace

EmissionRates eval_emission(Pipeline& pipe, const std::vector<train::LoadedRecord>& holdout,
                            int max_prompts, int max_new, uint64_t seed) {
    train::Trainer trainer(pipe);
    EmissionRates out;
    int n_img = 0, img_emit = 0, n_mm = 0, mm_emit = 0, n_txt = 0, txt_emit = 0, exact = 0;
    for (const auto& rec : holdout) {
        for (size_t k = 1; k < rec.steps.size() && out.n_prompts < max_prompts; ++k) {
            for (const auto kind :
                 {train::TaskKind::text_only, train::TaskKind::image_only,
                  train::TaskKind::multimodal}) {
                if (kind != train::TaskKind::multimodal && !rec.steps[k].has_image) continue;
                if (rec.kind == "dialogs" && kind != train::TaskKind::multimodal) continue;
                const train::RawSample raw = train::mls_prompt(pipe.vocab, rec, k, kind);
                lm::PromptSpec spec;
                spec.ids.push_back(pipe.vocab.bos);
                for (int id : raw.prompt_ids) spec.ids.push_back(id);
                for (const auto* img : raw.prompt_images)
                    spec.image_features.push_back(trainer.cached_features(img));

                lm::GenerateOptions gopts;
                gopts.max_new = max_new;
                gopts.greedy = true;
                gopts.seed = seed;
                gopts.eos_id = pipe.vocab.eos;
                const auto gen = pipe.model->generate(spec, gopts);
                const bool has = contains_voken(pipe.vocab, gen.ids);
                ++out.n_prompts;
                switch (kind) {
                    case train::TaskKind::text_only:
                        ++n_txt;
                        txt_emit += has;
                        break;
                    case train::TaskKind::image_only:
                        ++n_img;
                        img_emit += has;
                        break;
                    case train::TaskKind::multimodal:
                        ++n_mm;
                        mm_emit += has;
                        break;
                }
                if (has) {
                    ++out.n_emissions;
                    exact += exact_voken_block(pipe.vocab, gen.ids);
                }
            }
        }
        if (out.n_prompts >= max_prompts) break;
    }
    out.image_only = n_img ? double(img_emit) / n_img : 0;
    out.multimodal = n_mm ? double(mm_emit) / n_mm : 0;
    out.text_only = n_txt ? double(txt_emit) / n_txt : 0;
    out.exact_block = out.n_emissions ? double(exact) / out.n_emissions : 0;
    return out;
}

MetricReport eval_mls_text(Pipeline& pipe, const std::vector<train::LoadedRecord>& holdout,
                           int max_prompts, uint64_t seed) {
    train::Trainer trainer(pipe);
    MetricReport rep;
    rep.name = "mls_text";
    double bleu1 = 0, bleu2 = 0, rouge = 0, mmrel = 0;
    int n = 0, n_mm = 0;
    for (const auto& rec : holdout) {
        for (size_t k = 1; k < rec.steps.size() && n < max_prompts; ++k) {
            const train::RawSample raw =
                train::mls_prompt(pipe.vocab, rec, k, train::TaskKind::multimodal);
            lm::PromptSpec spec;
            spec.ids.push_back(pipe.vocab.bos);
            for (int id : raw.prompt_ids) spec.ids.push_back(id);
            for (const auto* img : raw.prompt_images)
                spec.image_features.push_back(trainer.cached_features(img));
            lm::GenerateOptions gopts;
            gopts.max_new = 40;
            gopts.seed = seed;
            gopts.eos_id = pipe.vocab.eos;
            const auto gen = pipe.model->generate(spec, gopts);

            std::vector<int> text_ids;
            for (int id : gen.ids)
                if (!pipe.vocab.is_voken(id)) text_ids.push_back(id);
            const std::string text = vocab::decode(pipe.vocab, text_ids);
            bleu1 += bleu(text, {rec.steps[k].text}, 1);
            bleu2 += bleu(text, {rec.steps[k].text}, 2);
            rouge += rouge_l(text, rec.steps[k].text);

            ModalContent pred, gold;
            pred.text = text;
            gold.text = rec.steps[k].text;
            if (rec.steps[k].has_image) gold.image = rec.steps[k].image;
            if (exact_voken_block(pipe.vocab, gen.ids)) {
                // complete the interleaved generation: map the emitted vokens
                lm::PromptSpec full = spec;
                std::vector<int> pos, ids;
                const size_t base = full.ids.size();
                for (size_t i = 0; i < gen.ids.size(); ++i) {
                    full.ids.push_back(gen.ids[i]);
                    if (pipe.vocab.is_voken(gen.ids[i])) {
                        ids.push_back(gen.ids[i]);
                        pos.push_back(int(base + i));
                    }
                }
                Graph g(false);
                const auto fr = pipe.model->forward(g, full);
                std::vector<int> eff;
                const auto layout = fr.layout;
                for (int p : pos) eff.push_back(layout.orig_to_eff[size_t(p)]);
                Ptr h = pipe.model->extract_voken_hidden(g, fr.hidden, eff, ids);
                diffusion::SamplerParams sp;
                sp.cond = pipe.map->map(g, h);
                sp.null_cond = pipe.map->map_null(g);
                sp.gamma = real(pipe.cfg.getf("eval.gamma"));
                sp.steps = pipe.cfg.geti("eval.sample_steps");
                sp.seed = seed + uint64_t(n);
                pred.image = diffusion::sample(*pipe.unet, pipe.schedule, sp);
            }
            mmrel += mm_relevance(pred, gold);
            ++n_mm;
            ++n;
        }
        if (n >= max_prompts) break;
    }
    if (n) {
        rep.values["bleu1"] = bleu1 / n;
        rep.values["bleu2"] = bleu2 / n;
        rep.values["rouge_l"] = rouge / n;
        rep.values["mm_relevance"] = mmrel / n_mm;
    }
    rep.counts["prompts"] = n;
    return rep;
}

MetricReport sweep_cfg(Pipeline& pipe, const std::vector<double>& scales,
                       const GenEvalOptions& base, std::vector<SweepRow>& rows) {
    MetricReport rep;
    rep.name = "cfg_sweep";
    for (double gamma : scales) {
        GenEvalOptions opts = base;
        opts.gamma = real(gamma);
        const auto r = eval_generation(pipe, Conditioning::voken, opts);
        SweepRow row;
        row.x = gamma;
        row.values["accuracy"] = r.accuracy;
        row.values["fid"] = r.fid;
        row.values["is"] = r.is_score;
        rows.push_back(row);
        char key[64];
        std::snprintf(key, sizeof(key), "accuracy@gamma=%g", gamma);
        rep.values[key] = r.accuracy;
        std::snprintf(key, sizeof(key), "fid@gamma=%g", gamma);
        rep.values[key] = r.fid;
        if (r.fid_shrunk) rep.notes.push_back("fid shrinkage applied");
    }
    rep.counts["samples_per_scale"] = base.n_samples;
    return rep;
}

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<SweepRow>& rows) {
    require(!rows.empty(), "svg chart: no rows");
    const int w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 40;
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail("svg chart: cannot write " + path);

    std::vector<std::string> series;
    for (const auto& [k, v] : rows[0].values) series.push_back(k);
    double xmin = rows[0].x, xmax = rows[0].x;
    for (const auto& r : rows) {
        xmin = std::min(xmin, r.x);
        xmax = std::max(xmax, r.x);
    }
    if (xmax == xmin) xmax = xmin + 1;

    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << w / 2 << "' y='20' text-anchor='middle' font-size='16'>" << title
        << "</text>\n";
    out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
        << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
        << "' stroke='black'/>\n";

    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    for (size_t s = 0; s < series.size(); ++s) {
        double ymin = 1e300, ymax = -1e300;
        for (const auto& r : rows) {
            ymin = std::min(ymin, r.values.at(series[s]));
            ymax = std::max(ymax, r.values.at(series[s]));
        }
        if (ymax == ymin) ymax = ymin + 1;
        out << "<polyline fill='none' stroke='" << colors[s % 5] << "' stroke-width='2' points='";
        for (const auto& r : rows) {
            const double px = ml + (r.x - xmin) / (xmax - xmin) * (w - ml - mr);
            const double py =
                h - mb - (r.values.at(series[s]) - ymin) / (ymax - ymin) * (h - mt - mb);
            out << px << "," << py << " ";
        }
        out << "'/>\n";
        out << "<text x='" << w - mr - 150 << "' y='" << mt + 18 * s << "' fill='"
            << colors[s % 5] << "' font-size='12'>" << series[s] << " [" << ymin << ", " << ymax
            << "]</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace voken::eval
