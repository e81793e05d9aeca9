#include "voken/io/kvconfig.hpp"

#include <fstream>
#include <sstream>

namespace voken::io {

const std::map<std::string, std::string>& RunConfig::registry() {
    static const std::map<std::string, std::string> defaults = {
        // corpus locations (consumed by pretrain/train/eval)
        {"data.pairs_dir", ""},
        {"data.stories_dir", ""},
        {"data.dialogs_dir", ""},
        // corpus generation
        {"data.max_objects", "2"},
        {"data.dialog_turns", "4"},
        {"data.p_img", "0.5"},
        // vocabulary / vokens
        {"vocab.n_vokens", "8"},
        // language model
        {"lm.d_model", "128"},
        {"lm.n_layers", "4"},
        {"lm.n_heads", "4"},
        {"lm.context_length", "256"},
        {"lm.img_tokens", "4"},
        // image encoder
        {"imgenc.k", "4"},
        {"imgenc.feat_dim", "64"},
        // feature mapper
        {"mapper.cond_len", "8"},
        {"mapper.cond_dim", "64"},
        {"mapper.mlp_hidden", "256"},
        {"mapper.enc_dec_layers", "4"},
        {"mapper.n_heads", "4"},
        {"mapper.input_positions", "1"},
        // diffusion
        {"diffusion.T", "200"},
        {"diffusion.beta1", "1e-4"},
        {"diffusion.betaT", "0.02"},
        {"diffusion.base", "32"},
        {"diffusion.temb_dim", "128"},
        {"diffusion.tau_layers", "2"},
        // trainer
        {"trainer.seed", "0"},
        {"trainer.lambda1", "0.01"},
        {"trainer.lambda2", "1"},
        {"trainer.lambda3", "0.1"},
        {"trainer.cfg_dropout", "0.1"},
        {"trainer.weight_decay", "0.01"},
        {"trainer.stage0_lm_steps", "600"},
        {"trainer.stage0_lm_lr", "1e-3"},
        {"trainer.stage0_lm_batch", "16"},
        {"trainer.stage0_diff_steps", "900"},
        {"trainer.stage0_diff_lr", "1e-3"},
        {"trainer.stage0_diff_batch", "16"},
        {"trainer.stage0_imgenc_steps", "500"},
        {"trainer.stage0_imgenc_lr", "1e-3"},
        {"trainer.stage0_imgenc_batch", "16"},
        {"trainer.uas_lr", "2e-4"},
        {"trainer.uas_batch", "48"},
        {"trainer.uas_epochs", "2"},
        {"trainer.uas_steps", "0"},  // 0: derived from epochs
        {"trainer.uas_use_cfg", "1"},
        {"trainer.uas_use_ldm", "1"},
        {"trainer.uas_use_cap", "1"},
        {"trainer.mls_lr", "2e-5"},
        {"trainer.mls_batch", "32"},
        {"trainer.mls_epochs", "4"},
        {"trainer.mls_steps", "0"},
        {"trainer.adapter", "lora"},  // lora | prefix
        {"trainer.lora_rank", "4"},
        {"trainer.lora_alpha", "8"},
        {"trainer.prefix_len", "8"},
        // sampling / evaluation
        {"sample.steps", "0"},  // 0: full T
        {"sample.gamma", "5"},
        {"eval.n_samples", "200"},
        {"eval.sample_steps", "25"},
        {"eval.gamma", "5"},
        {"eval.max_new", "24"},
    };
    return defaults;
}

RunConfig::RunConfig() : values_(registry()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) fail("unknown config key: " + key);
    it->second = value;
}

const std::string& RunConfig::raw(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) fail("unknown config key: " + key);
    return it->second;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("config: cannot open " + path);
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string key, eq, value;
        if (!(ls >> key)) continue;  // blank
        if (!(ls >> eq >> value) || eq != "=")
            fail("config: parse error at " + path + ":" + std::to_string(lineno) +
                 " (want 'key = value')");
        std::string extra;
        if (ls >> extra) fail("config: trailing tokens at " + path + ":" + std::to_string(lineno));
        cfg.set(key, value);
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) cfg.set(it.key(), it.value().get<std::string>());
    cfg.validate();
    return cfg;
}

int RunConfig::geti(const std::string& key) const { return int(geti64(key)); }

int64_t RunConfig::geti64(const std::string& key) const {
    const std::string& s = raw(key);
    try {
        size_t pos = 0;
        const int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail("config: key " + key + " is not an integer: '" + s + "'");
    }
}

double RunConfig::getf(const std::string& key) const {
    const std::string& s = raw(key);
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail("config: key " + key + " is not a number: '" + s + "'");
    }
}

bool RunConfig::getb(const std::string& key) const {
    const std::string& s = raw(key);
    if (s == "1" || s == "true") return true;
    if (s == "0" || s == "false") return false;
    fail("config: key " + key + " is not a boolean: '" + s + "'");
}

const std::string& RunConfig::gets(const std::string& key) const { return raw(key); }

void RunConfig::validate() const {
    require(geti("vocab.n_vokens") >= 1, "config: vocab.n_vokens must be >= 1");
    require(geti("lm.d_model") % geti("lm.n_heads") == 0,
            "config: lm.d_model must be divisible by lm.n_heads");
    require(getf("trainer.uas_lr") > 0 && getf("trainer.mls_lr") > 0,
            "config: learning rates must be positive");
    require(geti("diffusion.T") >= 1, "config: diffusion.T must be >= 1");
    require(getf("diffusion.beta1") > 0 && getf("diffusion.betaT") < 1 &&
                getf("diffusion.beta1") <= getf("diffusion.betaT"),
            "config: need 0 < beta1 <= betaT < 1");
    require(getf("trainer.cfg_dropout") >= 0 && getf("trainer.cfg_dropout") <= 1,
            "config: trainer.cfg_dropout must be in [0,1]");
    require(geti("data.max_objects") >= 1 && geti("data.max_objects") <= 3,
            "config: data.max_objects must be in [1,3]");
    const std::string& ad = gets("trainer.adapter");
    require(ad == "lora" || ad == "prefix", "config: trainer.adapter must be lora or prefix");
    require(getf("sample.gamma") >= 0 && getf("eval.gamma") >= 0,
            "config: guidance scale must be >= 0");
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
}

}  // namespace voken::io
