#include "voken/synth/corpus.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "voken/io/ppm.hpp"
#include "voken/io/sha256.hpp"

namespace voken::synth {

namespace fs = std::filesystem;
using nlohmann::json;

const char* corpus_kind_name(CorpusKind k) {
    switch (k) {
        case CorpusKind::pairs: return "pairs";
        case CorpusKind::stories: return "stories";
        case CorpusKind::dialogs: return "dialogs";
    }
    fail("bad corpus kind");
}

CorpusKind corpus_kind_from(const std::string& name) {
    if (name == "pairs") return CorpusKind::pairs;
    if (name == "stories") return CorpusKind::stories;
    if (name == "dialogs") return CorpusKind::dialogs;
    fail("unknown corpus kind: " + name);
}

namespace {

std::string record_id(CorpusKind kind, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%06d", corpus_kind_name(kind), i);
    return buf;
}

uint64_t record_seed(uint64_t seed, int i) { return seed * 0x100000001b3ULL + uint64_t(i); }

json step_json(const CorpusStep& s) {
    json j;
    j["text"] = s.text;
    if (s.image_path.empty())
        j["image_path"] = nullptr;
    else
        j["image_path"] = s.image_path;
    return j;
}

}  // namespace

CorpusManifest export_corpus(CorpusKind kind, int count, uint64_t seed, const std::string& dir,
                             const ExportOptions& opts) {
    require(count > 0, "export_corpus: count must be positive");
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "images", ec);
    if (ec) fail("export_corpus: cannot create " + dir + ": " + ec.message());

    const std::string records_path = (fs::path(dir) / "records.jsonl").string();
    std::ofstream out(records_path, std::ios::binary | std::ios::trunc);
    if (!out) fail("export_corpus: cannot write " + records_path);

    for (int i = 0; i < count; ++i) {
        CorpusRecord rec;
        rec.id = record_id(kind, i);
        rec.kind = corpus_kind_name(kind);
        const uint64_t rseed = record_seed(seed, i);
        if (kind == CorpusKind::pairs) {
            const SceneState scene = gen_scene(rseed, opts.max_objects);
            CorpusStep step;
            step.text = caption(scene);
            step.image_path = "images/" + rec.id + "_s0.ppm";
            io::write_ppm((fs::path(dir) / step.image_path).string(), render(scene));
            rec.steps.push_back(std::move(step));
        } else if (kind == CorpusKind::stories) {
            const Story story = gen_story(rseed);
            for (size_t s = 0; s < story.steps.size(); ++s) {
                CorpusStep step;
                step.text = story.steps[s].narration;
                step.image_path = "images/" + rec.id + "_s" + std::to_string(s) + ".ppm";
                io::write_ppm((fs::path(dir) / step.image_path).string(), story.steps[s].image);
                rec.steps.push_back(std::move(step));
            }
        } else {
            const Dialog dlg = gen_dialog(rseed, opts.dialog_turns, opts.p_img);
            for (size_t t = 0; t < dlg.turns.size(); ++t) {
                CorpusStep step;
                step.text = dlg.turns[t].text;
                if (dlg.turns[t].has_image) {
                    step.image_path = "images/" + rec.id + "_s" + std::to_string(t) + ".ppm";
                    io::write_ppm((fs::path(dir) / step.image_path).string(), dlg.turns[t].image);
                }
                rec.steps.push_back(std::move(step));
            }
        }
        json j;
        j["id"] = rec.id;
        j["kind"] = rec.kind;
        j["steps"] = json::array();
        for (const auto& s : rec.steps) j["steps"].push_back(step_json(s));
        out << j.dump() << "\n";
    }
    out.close();
    if (!out) fail("export_corpus: write failed for " + records_path);

    CorpusManifest man;
    man.kind = corpus_kind_name(kind);
    man.count = count;
    man.seed = seed;
    man.sha256 = io::sha256_file(records_path);

    json mj;
    mj["format_version"] = man.format_version;
    mj["kind"] = man.kind;
    mj["count"] = man.count;
    mj["seed"] = man.seed;
    mj["sha256"] = man.sha256;
    const std::string man_path = (fs::path(dir) / "manifest.json").string();
    std::ofstream mout(man_path, std::ios::binary | std::ios::trunc);
    if (!mout) fail("export_corpus: cannot write " + man_path);
    mout << mj.dump(2) << "\n";
    return man;
}

std::vector<CorpusRecord> load_corpus(const std::string& dir) {
    const std::string records_path = (fs::path(dir) / "records.jsonl").string();
    std::ifstream in(records_path, std::ios::binary);
    if (!in) fail("load_corpus: cannot open " + records_path);
    std::vector<CorpusRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        CorpusRecord rec;
        rec.id = j.at("id").get<std::string>();
        rec.kind = j.at("kind").get<std::string>();
        for (const auto& sj : j.at("steps")) {
            CorpusStep step;
            step.text = sj.at("text").get<std::string>();
            if (!sj.at("image_path").is_null()) step.image_path = sj.at("image_path").get<std::string>();
            rec.steps.push_back(std::move(step));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

CorpusManifest load_manifest(const std::string& dir) {
    const std::string man_path = (fs::path(dir) / "manifest.json").string();
    std::ifstream in(man_path, std::ios::binary);
    if (!in) fail("load_manifest: cannot open " + man_path);
    json j = json::parse(in);
    CorpusManifest man;
    man.format_version = j.at("format_version").get<int>();
    man.kind = j.at("kind").get<std::string>();
    man.count = j.at("count").get<int>();
    man.seed = j.at("seed").get<uint64_t>();
    man.sha256 = j.at("sha256").get<std::string>();
    return man;
}

Image load_step_image(const std::string& dir, const CorpusStep& step) {
    require(!step.image_path.empty(), "load_step_image: step has no image");
    return io::read_ppm((fs::path(dir) / step.image_path).string());
}

}  // namespace voken::synth
