#include "voken/vocab/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "voken/synth/corpus.hpp"

namespace voken::vocab {

namespace {
const char* kSpecials[] = {"<pad>", "<bos>", "<eos>", "<Img>", "<ImageHere>", "</Img>"};
constexpr int kNumSpecials = 6;
}  // namespace

int Vocabulary::lookup(const std::string& word) const {
    auto it = index.find(word);
    if (it == index.end()) fail("unknown word: '" + word + "' (closed grammar; no UNK)");
    return it->second;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string chunk; in >> chunk;) {
        size_t i = 0;
        while (i < chunk.size()) {
            const char c = chunk[i];
            if (c == '<' || c == '[') {
                const char close = c == '<' ? '>' : ']';
                const size_t end = chunk.find(close, i);
                if (end == std::string::npos) {
                    out.push_back(chunk.substr(i));
                    break;
                }
                out.push_back(chunk.substr(i, end - i + 1));
                i = end + 1;
            } else {
                const size_t next = chunk.find_first_of("<[", i);
                out.push_back(chunk.substr(i, next == std::string::npos ? next : next - i));
                if (next == std::string::npos) break;
                i = next;
            }
        }
    }
    return out;
}

Vocabulary build_vocab(const std::vector<std::string>& corpus_dirs,
                       const std::vector<std::string>& extra_texts) {
    std::map<std::string, int64_t> freq;
    int64_t total_texts = 0;
    auto count_text = [&](const std::string& text) {
        for (const auto& w : tokenize(text)) {
            bool special = false;
            for (const char* s : kSpecials) special |= w == s;
            if (!special) ++freq[w];
        }
        ++total_texts;
    };
    for (const auto& dir : corpus_dirs)
        for (const auto& rec : synth::load_corpus(dir))
            for (const auto& step : rec.steps) count_text(step.text);
    for (const auto& t : extra_texts) count_text(t);
    require(total_texts > 0 && !freq.empty(), "build_vocab: empty corpus");

    std::vector<std::pair<std::string, int64_t>> words(freq.begin(), freq.end());
    std::sort(words.begin(), words.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    for (const char* s : kSpecials) v.tokens.emplace_back(s);
    for (const auto& [w, f] : words) v.tokens.push_back(w);
    for (int i = 0; i < v.size(); ++i) v.index[v.tokens[size_t(i)]] = i;
    return v;
}

Vocabulary add_vokens(const Vocabulary& base, int n) {
    require(n >= 1, "add_vokens: n must be >= 1");
    require(base.n_vokens == 0, "add_vokens: vocabulary already has vokens");
    Vocabulary v = base;
    for (int j = 0; j < n; ++j) {
        const std::string tok = "[IMG" + std::to_string(j + 1) + "]";
        require(!v.index.count(tok), "add_vokens: token collision for " + tok);
        v.index[tok] = v.size();
        v.tokens.push_back(tok);
    }
    v.n_vokens = n;
    return v;
}

Vocabulary strip_vokens(const Vocabulary& v) {
    Vocabulary out = v;
    for (int j = 0; j < v.n_vokens; ++j) {
        out.index.erase(out.tokens.back());
        out.tokens.pop_back();
    }
    out.n_vokens = 0;
    return out;
}

TokenSequence encode(const Vocabulary& v, const std::string& text) {
    TokenSequence seq;
    for (const auto& w : tokenize(text)) {
        const int id = v.lookup(w);
        if (v.is_voken(id)) seq.voken_positions.push_back(int(seq.ids.size()));
        if (id == v.img_here) seq.image_slots.push_back(int(seq.ids.size()));
        seq.ids.push_back(id);
    }
    return seq;
}

std::string decode(const Vocabulary& v, const std::vector<int>& ids) {
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        out += v.str(ids[i]);
    }
    return out;
}

void save_vocab(const Vocabulary& v, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("save_vocab: cannot write " + path);
    out << "voken-vocab 1\n";
    out << "n_vokens " << v.n_vokens << "\n";
    out << "specials " << v.pad << " " << v.bos << " " << v.eos << " " << v.img_open << " "
        << v.img_here << " " << v.img_close << "\n";
    for (const auto& t : v.tokens) out << t << "\n";
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("load_vocab: cannot open " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    require(magic == "voken-vocab" && version == 1, "load_vocab: bad header in " + path);
    Vocabulary v;
    std::string key;
    in >> key >> v.n_vokens;
    require(key == "n_vokens", "load_vocab: bad header in " + path);
    in >> key >> v.pad >> v.bos >> v.eos >> v.img_open >> v.img_here >> v.img_close;
    require(key == "specials", "load_vocab: bad header in " + path);
    std::string line;
    std::getline(in, line);  // finish header line
    while (std::getline(in, line))
        if (!line.empty()) v.tokens.push_back(line);
    for (int i = 0; i < v.size(); ++i) v.index[v.tokens[size_t(i)]] = i;
    return v;
}

}  // namespace voken::vocab
