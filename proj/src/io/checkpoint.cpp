#include "voken/io/checkpoint.hpp"

#include <cstdio>
#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>

#include "voken/io/sha256.hpp"

namespace voken::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'V', 'O', 'K', 'T', 'N', 'S', 'R', '\0'};

void write_u64(FILE* f, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (unsigned char)(v >> (8 * i));
    if (std::fwrite(b, 1, 8, f) != 8) fail("checkpoint: short write");
}

uint64_t read_u64(FILE* f) {
    unsigned char b[8];
    if (std::fread(b, 1, 8, f) != 8) fail("checkpoint: truncated blob");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return v;
}

std::string blob_name(const std::string& group) { return group + ".bin"; }

}  // namespace

void save_checkpoint(const std::string& dir, const std::string& stage, const RunConfig& cfg,
                     const ParamStore& store, const vocab::Vocabulary& vocab) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail("checkpoint: cannot create " + dir + ": " + ec.message());

    json groups = json::array();
    for (const auto& gname : store.group_names()) {
        const std::string path = (fs::path(dir) / blob_name(gname)).string();
        std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), std::fclose);
        if (!f) fail("checkpoint: cannot write " + path);
        json tensors = json::array();
        for (const auto& e : store.group(gname)) {
            if (std::fwrite(kMagic, 1, 8, f.get()) != 8) fail("checkpoint: short write");
            write_u64(f.get(), uint64_t(e.t->shape.size()));
            for (int d : e.t->shape) write_u64(f.get(), uint64_t(d));
            std::vector<float> buf(e.t->v.begin(), e.t->v.end());
            if (std::fwrite(buf.data(), sizeof(float), buf.size(), f.get()) != buf.size())
                fail("checkpoint: short write to " + path);
            json tj;
            tj["name"] = e.name;
            tj["shape"] = e.t->shape;
            tensors.push_back(tj);
        }
        f.reset();
        json gj;
        gj["name"] = gname;
        gj["tensors"] = tensors;
        gj["sha256"] = sha256_file(path);
        groups.push_back(gj);
    }

    save_vocab(vocab, (fs::path(dir) / "vocab.txt").string());

    json man;
    man["format_version"] = 1;
    man["stage"] = stage;
    man["config"] = cfg.to_json();
    man["groups"] = groups;
    const std::string man_path = (fs::path(dir) / "manifest.json").string();
    std::ofstream out(man_path, std::ios::binary | std::ios::trunc);
    if (!out) fail("checkpoint: cannot write " + man_path);
    out << man.dump(2) << "\n";
}

static json read_manifest(const std::string& dir) {
    const std::string man_path = (fs::path(dir) / "manifest.json").string();
    std::ifstream in(man_path, std::ios::binary);
    if (!in) fail("checkpoint: cannot open " + man_path);
    json man = json::parse(in);
    require(man.at("format_version").get<int>() == 1, "checkpoint: unsupported format version");
    return man;
}

CheckpointMeta read_checkpoint_meta(const std::string& dir) {
    const json man = read_manifest(dir);
    CheckpointMeta meta{man.at("stage").get<std::string>(),
                        RunConfig::from_json(man.at("config"))};
    return meta;
}

vocab::Vocabulary read_checkpoint_vocab(const std::string& dir) {
    return vocab::load_vocab((fs::path(dir) / "vocab.txt").string());
}

bool checkpoint_has_group(const std::string& dir, const std::string& group) {
    const json man = read_manifest(dir);
    for (const auto& gj : man.at("groups"))
        if (gj.at("name").get<std::string>() == group) return true;
    return false;
}

void load_checkpoint_params(const std::string& dir, ParamStore& store) {
    load_checkpoint_groups(dir, store, {});
}

void load_checkpoint_groups(const std::string& dir, ParamStore& store,
                            const std::vector<std::string>& groups) {
    const json man = read_manifest(dir);
    for (const auto& gj : man.at("groups")) {
        const std::string gname = gj.at("name").get<std::string>();
        if (!groups.empty() &&
            std::find(groups.begin(), groups.end(), gname) == groups.end())
            continue;
        require(store.has_group(gname), "checkpoint: store lacks group " + gname);
        const auto& entries = store.group(gname);
        require(entries.size() == gj.at("tensors").size(),
                "checkpoint: tensor count mismatch in group " + gname);

        const std::string path = (fs::path(dir) / blob_name(gname)).string();
        require(sha256_file(path) == gj.at("sha256").get<std::string>(),
                "checkpoint: hash mismatch for " + path);
        std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "rb"), std::fclose);
        if (!f) fail("checkpoint: cannot open " + path);

        for (size_t i = 0; i < entries.size(); ++i) {
            const auto& e = entries[i];
            const auto& tj = gj.at("tensors")[i];
            require(tj.at("name").get<std::string>() == e.name,
                    "checkpoint: tensor order mismatch in " + gname);
            char magic[8];
            if (std::fread(magic, 1, 8, f.get()) != 8 || std::memcmp(magic, kMagic, 8) != 0)
                fail("checkpoint: bad magic in " + path);
            const uint64_t rank = read_u64(f.get());
            require(rank == e.t->shape.size(), "checkpoint: rank mismatch for " + e.name);
            for (size_t d = 0; d < rank; ++d)
                require(int64_t(read_u64(f.get())) == e.t->shape[d],
                        "checkpoint: shape mismatch for " + e.name);
            std::vector<float> buf(size_t(e.t->size()));
            if (std::fread(buf.data(), sizeof(float), buf.size(), f.get()) != buf.size())
                fail("checkpoint: truncated tensor " + e.name + " in " + path);
            for (size_t j = 0; j < buf.size(); ++j) e.t->v[j] = real(buf[j]);
        }
    }
}

}  // namespace voken::io
