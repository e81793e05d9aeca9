// vokenlab: interleaved text-and-image generation on the synthetic shapes
// world. Subcommands cover corpus export, the three training stages, guided
// sampling, metric evaluation and the two ablation sweeps.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "voken/eval/harness.hpp"
#include "voken/io/ppm.hpp"
#include "voken/io/sha256.hpp"
#include "voken/train/templates.hpp"
#include "voken/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace voken;
using nlohmann::json;

namespace {

json corpus_fingerprint(const std::string& dir) {
    json j;
    if (dir.empty()) return j;
    const auto man = synth::load_manifest(dir);
    j["dir"] = dir;
    j["kind"] = man.kind;
    j["count"] = man.count;
    j["seed"] = man.seed;
    j["sha256"] = man.sha256;
    return j;
}

void write_manifest(const std::string& out_dir, const std::string& command, const json& body) {
    fs::create_directories(out_dir);
    json j = body;
    j["command"] = command;
    j["format_version"] = 1;
    std::ofstream out(fs::path(out_dir) / "run_manifest.json", std::ios::trunc);
    if (!out) fail("cannot write run manifest in " + out_dir);
    out << j.dump(2) << "\n";
}

vocab::Vocabulary build_vocab_for(const io::RunConfig& cfg) {
    std::vector<std::string> dirs;
    for (const char* key : {"data.pairs_dir", "data.stories_dir", "data.dialogs_dir"})
        if (!cfg.gets(key).empty()) dirs.push_back(cfg.gets(key));
    require(!dirs.empty(), "config: no corpus directories set (data.pairs_dir, ...)");
    return vocab::add_vokens(vocab::build_vocab(dirs, train::template_lexicon()),
                             cfg.geti("vocab.n_vokens"));
}

json stage_metrics_json(const train::StageMetrics& m) {
    json j;
    j["stage"] = m.stage;
    j["steps"] = m.steps;
    j["text_mean"] = m.text_mean;
    j["ldm_mean"] = m.ldm_mean;
    j["cap_mean"] = m.cap_mean;
    j["total"] = m.total;
    for (const auto& [k, v] : m.extra) j[k] = v;
    return j;
}

int cmd_gen_data(const std::string& kind, int count, uint64_t seed, const std::string& out,
                 int max_objects, int turns, double p_img) {
    synth::ExportOptions opts;
    opts.max_objects = max_objects;
    opts.dialog_turns = turns;
    opts.p_img = p_img;
    const auto man = synth::export_corpus(synth::corpus_kind_from(kind), count, seed, out, opts);
    json j;
    j["manifest"] = {{"kind", man.kind}, {"count", man.count}, {"seed", man.seed},
                     {"sha256", man.sha256}};
    write_manifest(out, "gen-data", j);
    std::printf("wrote %d %s records to %s (sha256 %s)\n", man.count, man.kind.c_str(),
                out.c_str(), man.sha256.c_str());
    return 0;
}

int cmd_pretrain(const std::string& config_path, const std::string& out) {
    const auto cfg = io::RunConfig::from_file(config_path);
    require(!cfg.gets("data.pairs_dir").empty(), "pretrain: data.pairs_dir not set");
    const auto vocab = build_vocab_for(cfg);
    auto pipe = train::Pipeline::build(cfg, vocab);
    train::Trainer trainer(*pipe);

    std::vector<std::string> text_dirs;
    for (const char* key : {"data.pairs_dir", "data.stories_dir", "data.dialogs_dir"})
        if (!cfg.gets(key).empty()) text_dirs.push_back(cfg.gets(key));

    const auto metrics = trainer.pretrain_stage0(cfg.gets("data.pairs_dir"), text_dirs);
    pipe->save(out, "stage0");

    json j;
    j["config"] = cfg.to_json();
    j["stages"] = json::array();
    for (const auto& m : metrics) j["stages"].push_back(stage_metrics_json(m));
    j["corpora"] = json::array();
    for (const auto& d : text_dirs) j["corpora"].push_back(corpus_fingerprint(d));
    write_manifest(out, "pretrain", j);
    for (const auto& m : metrics)
        std::printf("%-18s steps=%-5d final=%.6f\n", m.stage.c_str(), m.steps, m.total);
    return 0;
}

int cmd_train(const std::string& stage, const std::string& config_path, const std::string& from,
              const std::string& out) {
    require(!from.empty(), stage == "mls" ? "missing UAS checkpoint (--from)"
                                          : "missing stage-0 checkpoint (--from)");
    auto pipe = train::Pipeline::load(from);
    if (!config_path.empty()) {
        // fresh config for this run; model-shape keys must match the checkpoint
        const auto cfg = io::RunConfig::from_file(config_path);
        for (const char* key :
             {"lm.d_model", "lm.n_layers", "lm.n_heads", "vocab.n_vokens", "mapper.cond_len",
              "mapper.cond_dim", "diffusion.base", "diffusion.T"})
            require(cfg.gets(key) == pipe->cfg.gets(key),
                    std::string("train: config key ") + key + " conflicts with the checkpoint");
        pipe->cfg = cfg;
    }
    train::Trainer trainer(*pipe);
    train::StageMetrics m;
    if (stage == "uas") {
        require(!pipe->cfg.gets("data.pairs_dir").empty(), "train uas: data.pairs_dir not set");
        train::UasAblation ab;
        ab.use_cfg = pipe->cfg.getb("trainer.uas_use_cfg");
        ab.use_ldm = pipe->cfg.getb("trainer.uas_use_ldm");
        ab.use_cap = pipe->cfg.getb("trainer.uas_use_cap");
        m = trainer.train_uas(pipe->cfg.gets("data.pairs_dir"), ab);
        pipe->save(out, "uas");
    } else if (stage == "mls") {
        const auto meta = io::read_checkpoint_meta(from);
        require(meta.stage == "uas" || meta.stage == "mls",
                "missing UAS checkpoint: --from must point at a uas checkpoint, got stage '" +
                    meta.stage + "'");
        pipe->attach_adapter_from_config();
        std::vector<std::string> dirs;
        for (const char* key : {"data.stories_dir", "data.dialogs_dir"})
            if (!pipe->cfg.gets(key).empty()) dirs.push_back(pipe->cfg.gets(key));
        require(!dirs.empty(), "train mls: no stories/dialogs corpus set");
        m = trainer.train_mls(dirs);
        pipe->save(out, "mls");
    } else {
        fail("train: unknown stage '" + stage + "' (want uas or mls)");
    }

    json j;
    j["config"] = pipe->cfg.to_json();
    j["from"] = from;
    j["metrics"] = stage_metrics_json(m);
    write_manifest(out, "train-" + stage, j);
    std::printf("%s done: steps=%d total=%.6f (text=%.4f ldm=%.4f cap=%.4f)\n", stage.c_str(),
                m.steps, m.total, m.text_mean, m.ldm_mean, m.cap_mean);
    return 0;
}

int cmd_sample(const std::string& from, const std::string& prompt_path, double gamma,
               uint64_t seed, const std::string& out) {
    auto pipe = train::Pipeline::load(from);
    const auto meta = io::read_checkpoint_meta(from);
    std::ifstream in(prompt_path);
    if (!in) fail("sample: cannot open prompt file " + prompt_path);
    fs::create_directories(out);

    Graph g(false);
    Ptr null_cond = meta.stage == "stage0" ? pipe->tau->encode_ids(g, {})
                                           : pipe->map->map_null(g);
    json outputs = json::array();
    std::string line;
    int idx = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Ptr cond;
        if (meta.stage == "stage0") {
            cond = pipe->tau->encode_text(g, pipe->vocab, line);
        } else {
            // teacher-forced voken block after the caption
            lm::PromptSpec spec;
            spec.ids.push_back(pipe->vocab.bos);
            for (int id : vocab::encode(pipe->vocab, line).ids) spec.ids.push_back(id);
            std::vector<int> pos, ids;
            for (int j = 0; j < pipe->vocab.n_vokens; ++j) {
                pos.push_back(int(spec.ids.size()));
                ids.push_back(pipe->vocab.voken_id(j));
                spec.ids.push_back(pipe->vocab.voken_id(j));
            }
            const auto fr = pipe->model->forward(g, spec);
            std::vector<int> eff;
            for (int p : pos) eff.push_back(fr.layout.orig_to_eff[size_t(p)]);
            cond = pipe->map->map(g, pipe->model->extract_voken_hidden(g, fr.hidden, eff, ids));
        }
        diffusion::SamplerParams sp;
        sp.gamma = real(gamma);
        sp.steps = pipe->cfg.geti("sample.steps");
        sp.seed = seed + uint64_t(idx);
        sp.cond = cond;
        sp.null_cond = null_cond;
        const auto img = diffusion::sample(*pipe->unet, pipe->schedule, sp);
        char name[64];
        std::snprintf(name, sizeof(name), "sample_%04d.ppm", idx);
        io::write_ppm((fs::path(out) / name).string(), img);
        json oj;
        oj["prompt"] = line;
        oj["image"] = name;
        oj["parsed"] = synth::caption(synth::parse_image(img));
        outputs.push_back(oj);
        ++idx;
    }
    json j;
    j["config"] = pipe->cfg.to_json();
    j["from"] = from;
    j["gamma"] = gamma;
    j["seed"] = seed;
    j["outputs"] = outputs;
    write_manifest(out, "sample", j);
    std::printf("wrote %d samples to %s\n", idx, out.c_str());
    return 0;
}

int cmd_eval(const std::string& from, const std::string& corpus, const std::string& metrics_list,
             const std::string& out) {
    auto pipe = train::Pipeline::load(from);
    const auto meta = io::read_checkpoint_meta(from);
    std::set<std::string> want;
    {
        std::stringstream ss(metrics_list);
        for (std::string m; std::getline(ss, m, ',');) want.insert(m);
    }
    auto wanted = [&](const char* m) { return want.empty() || want.count(m); };

    eval::MetricReport rep;
    rep.name = "eval";
    json j;
    j["config"] = pipe->cfg.to_json();
    j["from"] = from;
    if (!corpus.empty()) j["corpus"] = corpus_fingerprint(corpus);

    if (wanted("classifier")) {
        const auto c = eval::eval_classifier(*pipe, 200, 4242);
        rep.values["classifier_cell_top1"] = c.cell_top1;
        rep.values["classifier_scene_exact"] = c.scene_exact;
    }
    if (wanted("accuracy") || wanted("fid") || wanted("is")) {
        eval::GenEvalOptions opts;
        opts.n_samples = pipe->cfg.geti("eval.n_samples");
        opts.sample_steps = pipe->cfg.geti("eval.sample_steps");
        opts.gamma = real(pipe->cfg.getf("eval.gamma"));
        opts.max_objects = pipe->cfg.geti("data.max_objects");
        const auto mode = meta.stage == "stage0" ? eval::Conditioning::caption
                                                 : eval::Conditioning::voken;
        const auto r = eval::eval_generation(*pipe, mode, opts);
        rep.values["accuracy"] = r.accuracy;
        rep.values["accuracy_text"] = r.accuracy_text;
        rep.values["fid"] = r.fid;
        rep.values["is"] = r.is_score;
        rep.counts["gen_samples"] = r.n;
        if (r.fid_shrunk) rep.notes.push_back("fid shrinkage applied");
    }
    if (!corpus.empty() && (wanted("emission") || wanted("bleu") || wanted("rouge") ||
                            wanted("mmrel"))) {
        const auto holdout = train::load_corpus_data(corpus, pipe->vocab);
        if (wanted("emission")) {
            const auto e = eval::eval_emission(*pipe, holdout, 120,
                                               pipe->cfg.geti("eval.max_new"), 99);
            rep.values["emission_image_only"] = e.image_only;
            rep.values["emission_multimodal"] = e.multimodal;
            rep.values["emission_text_only"] = e.text_only;
            rep.values["emission_exact_block"] = e.exact_block;
            rep.counts["emission_prompts"] = e.n_prompts;
        }
        if (wanted("bleu") || wanted("rouge") || wanted("mmrel")) {
            const auto t = eval::eval_mls_text(*pipe, holdout, 24, 99);
            for (const auto& [k, v] : t.values) rep.values[k] = v;
            for (const auto& [k, v] : t.counts) rep.counts[k] = v;
        }
    }

    j["report"] = rep.to_json();
    fs::create_directories(fs::path(out).parent_path().empty() ? "." :
                           fs::path(out).parent_path().string());
    std::ofstream rf(out, std::ios::trunc);
    if (!rf) fail("eval: cannot write report " + out);
    rf << j.dump(2) << "\n";
    std::fputs(rep.to_table().c_str(), stdout);
    return 0;
}

int cmd_ablate(const std::string& kind, const std::string& values_list,
               const std::string& config_path, const std::string& from, const std::string& out) {
    std::vector<double> values;
    {
        std::stringstream ss(values_list);
        for (std::string v; std::getline(ss, v, ',');) values.push_back(std::stod(v));
    }
    require(!values.empty(), "ablate: no values given");
    fs::create_directories(out);

    json j;
    j["kind"] = kind;
    std::vector<eval::SweepRow> rows;

    if (kind == "cfg") {
        require(!from.empty(), "ablate cfg: --from UAS checkpoint required");
        auto pipe = train::Pipeline::load(from);
        if (!config_path.empty()) pipe->cfg = io::RunConfig::from_file(config_path);
        eval::GenEvalOptions opts;
        opts.n_samples = pipe->cfg.geti("eval.n_samples");
        opts.sample_steps = pipe->cfg.geti("eval.sample_steps");
        opts.max_objects = pipe->cfg.geti("data.max_objects");
        const auto rep = eval::sweep_cfg(*pipe, values, opts, rows);
        j["report"] = rep.to_json();
        j["config"] = pipe->cfg.to_json();
        std::fputs(rep.to_table().c_str(), stdout);
    } else if (kind == "vokens") {
        require(!from.empty(), "ablate vokens: --from stage-0 checkpoint required");
        require(!config_path.empty(), "ablate vokens: --config required");
        const auto cfg = io::RunConfig::from_file(config_path);
        require(!cfg.gets("data.pairs_dir").empty(), "ablate vokens: data.pairs_dir not set");
        eval::MetricReport rep;
        rep.name = "voken_sweep";
        const auto base_vocab = vocab::strip_vokens(io::read_checkpoint_vocab(from));
        for (double vn : values) {
            const int n = int(vn);
            require(n >= 1 && n <= 16, "ablate vokens: n must be in [1,16]");
            auto run_cfg = cfg;
            run_cfg.set("vocab.n_vokens", std::to_string(n));
            auto pipe = train::Pipeline::build(run_cfg, vocab::add_vokens(base_vocab, n));
            io::load_checkpoint_groups(from, pipe->store,
                                       {lm::CausalLM::kGroupPretrained,
                                        imgenc::ImageEncoder::kGroup, diffusion::UNet::kGroup,
                                        diffusion::CaptionEncoder::kGroup});
            train::Trainer trainer(*pipe);
            trainer.train_uas(run_cfg.gets("data.pairs_dir"));
            eval::GenEvalOptions opts;
            opts.n_samples = run_cfg.geti("eval.n_samples");
            opts.sample_steps = run_cfg.geti("eval.sample_steps");
            opts.gamma = real(run_cfg.getf("eval.gamma"));
            opts.max_objects = run_cfg.geti("data.max_objects");
            const auto r = eval::eval_generation(*pipe, eval::Conditioning::voken, opts);
            eval::SweepRow row;
            row.x = vn;
            row.values["accuracy"] = r.accuracy;
            row.values["fid"] = r.fid;
            rows.push_back(row);
            char key[64];
            std::snprintf(key, sizeof(key), "accuracy@n=%d", n);
            rep.values[key] = r.accuracy;
        }
        j["report"] = rep.to_json();
        j["config"] = cfg.to_json();
        std::fputs(rep.to_table().c_str(), stdout);
    } else {
        fail("ablate: unknown kind '" + kind + "' (want cfg or vokens)");
    }

    json table = json::array();
    for (const auto& r : rows) {
        json rj;
        rj["x"] = r.x;
        for (const auto& [k, v] : r.values) rj[k] = v;
        table.push_back(rj);
    }
    j["table"] = table;
    {
        std::ofstream tf(fs::path(out) / "sweep.jsonl", std::ios::trunc);
        for (const auto& r : table) tf << r.dump() << "\n";
    }
    eval::write_svg_chart((fs::path(out) / ("sweep_" + kind + ".svg")).string(),
                          kind == "cfg" ? "metrics vs guidance scale" : "metrics vs voken count",
                          rows);
    write_manifest(out, "ablate-" + kind, j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vokenlab: interleaved vision-and-language generation on a synthetic world"};
    app.require_subcommand(1);

    // gen-data
    std::string gd_kind, gd_out;
    int gd_count = 100, gd_max_objects = 2, gd_turns = 4;
    uint64_t gd_seed = 0;
    double gd_p_img = 0.5;
    auto* gd = app.add_subcommand("gen-data", "export a synthetic corpus");
    gd->add_option("--kind", gd_kind, "pairs|stories|dialogs")->required();
    gd->add_option("--count", gd_count)->required();
    gd->add_option("--seed", gd_seed)->required();
    gd->add_option("--out", gd_out)->required();
    gd->add_option("--max-objects", gd_max_objects);
    gd->add_option("--turns", gd_turns);
    gd->add_option("--p-img", gd_p_img);

    // pretrain
    std::string pt_config, pt_out;
    auto* pt = app.add_subcommand("pretrain", "stage 0: train the frozen components");
    pt->add_option("--config", pt_config)->required();
    pt->add_option("--out", pt_out)->required();

    // train
    std::string tr_stage, tr_config, tr_from, tr_out;
    auto* tr = app.add_subcommand("train", "run uas or mls");
    tr->add_option("--stage", tr_stage, "uas|mls")->required();
    tr->add_option("--config", tr_config);
    tr->add_option("--from", tr_from);
    tr->add_option("--out", tr_out)->required();

    // sample
    std::string sm_from, sm_prompt, sm_out;
    double sm_gamma = 5;
    uint64_t sm_seed = 0;
    auto* sm = app.add_subcommand("sample", "generate images for prompt captions");
    sm->add_option("--from", sm_from)->required();
    sm->add_option("--prompt", sm_prompt)->required();
    sm->add_option("--gamma", sm_gamma);
    sm->add_option("--seed", sm_seed);
    sm->add_option("--out", sm_out)->required();

    // eval
    std::string ev_from, ev_corpus, ev_metrics, ev_out;
    auto* ev = app.add_subcommand("eval", "compute metric report");
    ev->add_option("--from", ev_from)->required();
    ev->add_option("--corpus", ev_corpus);
    ev->add_option("--metrics", ev_metrics, "comma list; empty = all applicable");
    ev->add_option("--out", ev_out)->required();

    // ablate
    std::string ab_kind, ab_values, ab_config, ab_from, ab_out;
    auto* ab = app.add_subcommand("ablate", "cfg-scale or voken-count sweep");
    ab->add_option("--kind", ab_kind, "cfg|vokens")->required();
    ab->add_option("--values", ab_values)->required();
    ab->add_option("--config", ab_config);
    ab->add_option("--from", ab_from);
    ab->add_option("--out", ab_out)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gd->parsed())
            return cmd_gen_data(gd_kind, gd_count, gd_seed, gd_out, gd_max_objects, gd_turns,
                                gd_p_img);
        if (pt->parsed()) return cmd_pretrain(pt_config, pt_out);
        if (tr->parsed()) return cmd_train(tr_stage, tr_config, tr_from, tr_out);
        if (sm->parsed()) return cmd_sample(sm_from, sm_prompt, sm_gamma, sm_seed, sm_out);
        if (ev->parsed()) return cmd_eval(ev_from, ev_corpus, ev_metrics, ev_out);
        if (ab->parsed()) return cmd_ablate(ab_kind, ab_values, ab_config, ab_from, ab_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
