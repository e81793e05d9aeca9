#include "voken/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace voken::eval {

namespace {

std::vector<std::string> words_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& words,
                                                     int n) {
    std::map<std::vector<std::string>, int> counts;
    if (int(words.size()) < n) return counts;
    for (size_t i = 0; i + size_t(n) <= words.size(); ++i)
        ++counts[std::vector<std::string>(words.begin() + long(i), words.begin() + long(i + n))];
    return counts;
}

}  // namespace

double bleu(const std::string& candidate, const std::vector<std::string>& references, int max_n) {
    require(max_n == 1 || max_n == 2, "bleu: max_n must be 1 or 2");
    require(!references.empty(), "bleu: need at least one reference");
    const auto cand = words_of(candidate);
    if (cand.empty()) return 0;

    std::vector<std::vector<std::string>> refs;
    for (const auto& r : references) refs.push_back(words_of(r));

    double log_p = 0;
    for (int n = 1; n <= max_n; ++n) {
        const auto cc = ngram_counts(cand, n);
        int64_t total = 0, matched = 0;
        std::vector<std::map<std::vector<std::string>, int>> rc;
        for (const auto& r : refs) rc.push_back(ngram_counts(r, n));
        for (const auto& [gram, count] : cc) {
            total += count;
            int best = 0;
            for (const auto& counts : rc) {
                auto it = counts.find(gram);
                if (it != counts.end()) best = std::max(best, it->second);
            }
            matched += std::min(count, best);
        }
        if (total == 0 || matched == 0) return 0;
        log_p += std::log(double(matched) / double(total)) / max_n;
    }

    // closest reference length for the brevity penalty
    size_t r_len = refs[0].size();
    for (const auto& r : refs)
        if (std::llabs(int64_t(r.size()) - int64_t(cand.size())) <
            std::llabs(int64_t(r_len) - int64_t(cand.size())))
            r_len = r.size();
    const double bp =
        cand.size() >= r_len ? 1.0 : std::exp(1.0 - double(r_len) / double(cand.size()));
    return bp * std::exp(log_p);
}

double rouge_l(const std::string& candidate, const std::string& reference) {
    const auto c = words_of(candidate);
    const auto r = words_of(reference);
    if (c.empty() || r.empty()) return c.empty() && r.empty() ? 1.0 : 0.0;
    std::vector<std::vector<int>> lcs(c.size() + 1, std::vector<int>(r.size() + 1, 0));
    for (size_t i = 1; i <= c.size(); ++i)
        for (size_t j = 1; j <= r.size(); ++j)
            lcs[i][j] = c[i - 1] == r[j - 1] ? lcs[i - 1][j - 1] + 1
                                             : std::max(lcs[i - 1][j], lcs[i][j - 1]);
    const double l = lcs[c.size()][r.size()];
    if (l == 0) return 0;
    const double p = l / double(c.size());
    const double rr = l / double(r.size());
    return 2 * p * rr / (p + rr);
}

double attribute_accuracy(const synth::Image& generated, const synth::SceneState& target) {
    require(!target.objects.empty(), "attribute_accuracy: target scene has no objects");
    const synth::SceneState pred = synth::parse_image(generated);
    int matched = 0;
    for (const auto& t : target.objects) {
        const synth::SceneObject* hit = nullptr;
        for (const auto& p : pred.objects)
            if (p.row == t.row && p.col == t.col) hit = &p;
        if (!hit) continue;
        matched += 1;  // cell occupied
        matched += hit->shape == t.shape;
        matched += hit->color == t.color;
    }
    return double(matched) / (3.0 * double(target.objects.size()));
}

double attribute_accuracy_text(const synth::Image& generated, const std::string& caption) {
    return attribute_accuracy(generated, synth::parse_caption(caption));
}

void jacobi_eigen(std::vector<double>& a, int n, std::vector<double>& eigenvalues,
                  std::vector<double>& eigenvectors) {
    eigenvectors.assign(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) eigenvectors[size_t(i) * n + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a[size_t(i) * n + j] * a[size_t(i) * n + j];
        if (off < 1e-24) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[size_t(p) * n + q];
                if (std::fabs(apq) < 1e-300) continue;
                const double app = a[size_t(p) * n + p], aqq = a[size_t(q) * n + q];
                const double theta = (aqq - app) / (2 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[size_t(k) * n + p], akq = a[size_t(k) * n + q];
                    a[size_t(k) * n + p] = c * akp - s * akq;
                    a[size_t(k) * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[size_t(p) * n + k], aqk = a[size_t(q) * n + k];
                    a[size_t(p) * n + k] = c * apk - s * aqk;
                    a[size_t(q) * n + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = eigenvectors[size_t(k) * n + p];
                    const double vkq = eigenvectors[size_t(k) * n + q];
                    eigenvectors[size_t(k) * n + p] = c * vkp - s * vkq;
                    eigenvectors[size_t(k) * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    eigenvalues.assign(size_t(n), 0.0);
    for (int i = 0; i < n; ++i) eigenvalues[size_t(i)] = a[size_t(i) * n + i];
}

namespace {

// B = V diag(sqrt(max(eig,0))) V^T
std::vector<double> sqrtm_psd(std::vector<double> a, int n) {
    std::vector<double> evals, evecs;
    jacobi_eigen(a, n, evals, evecs);
    std::vector<double> out(size_t(n) * n, 0.0);
    for (int k = 0; k < n; ++k) {
        const double s = std::sqrt(std::max(0.0, evals[size_t(k)]));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                out[size_t(i) * n + j] += s * evecs[size_t(i) * n + k] * evecs[size_t(j) * n + k];
    }
    return out;
}

std::vector<double> matmul_d(const std::vector<double>& a, const std::vector<double>& b, int n) {
    std::vector<double> c(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const double aik = a[size_t(i) * n + k];
            for (int j = 0; j < n; ++j) c[size_t(i) * n + j] += aik * b[size_t(k) * n + j];
        }
    return c;
}

struct Gaussian {
    std::vector<double> mean;
    std::vector<double> cov;
    int dim = 0;
};

Gaussian fit_gaussian(const std::vector<std::vector<real>>& set, bool& shrunk) {
    const int n = int(set.size());
    const int d = int(set[0].size());
    Gaussian g;
    g.dim = d;
    g.mean.assign(size_t(d), 0.0);
    for (const auto& x : set)
        for (int j = 0; j < d; ++j) g.mean[size_t(j)] += double(x[size_t(j)]);
    for (auto& m : g.mean) m /= n;
    g.cov.assign(size_t(d) * d, 0.0);
    for (const auto& x : set)
        for (int i = 0; i < d; ++i) {
            const double di = double(x[size_t(i)]) - g.mean[size_t(i)];
            for (int j = 0; j < d; ++j)
                g.cov[size_t(i) * d + j] += di * (double(x[size_t(j)]) - g.mean[size_t(j)]);
        }
    const double denom = n > 1 ? double(n - 1) : 1.0;
    for (auto& c : g.cov) c /= denom;
    if (n < d + 1) {
        shrunk = true;
        for (int i = 0; i < d; ++i) g.cov[size_t(i) * d + i] += 1e-6;
    }
    return g;
}

}  // namespace

double fid_proxy(const std::vector<std::vector<real>>& set_a,
                 const std::vector<std::vector<real>>& set_b, bool* shrinkage_applied) {
    require(set_a.size() >= 2 && set_b.size() >= 2, "fid_proxy: need at least 2 samples per set");
    require(set_a[0].size() == set_b[0].size(), "fid_proxy: feature dimension mismatch");
    bool shrunk = false;
    const Gaussian ga = fit_gaussian(set_a, shrunk);
    const Gaussian gb = fit_gaussian(set_b, shrunk);
    if (shrinkage_applied) *shrinkage_applied = shrunk;
    const int d = ga.dim;

    double mean_term = 0;
    for (int i = 0; i < d; ++i) {
        const double dm = ga.mean[size_t(i)] - gb.mean[size_t(i)];
        mean_term += dm * dm;
    }
    double tr_a = 0, tr_b = 0;
    for (int i = 0; i < d; ++i) {
        tr_a += ga.cov[size_t(i) * d + i];
        tr_b += gb.cov[size_t(i) * d + i];
    }
    // tr((Sa Sb)^(1/2)) via the symmetrized product sqrt(Sa) Sb sqrt(Sa)
    const std::vector<double> sa_half = sqrtm_psd(ga.cov, d);
    std::vector<double> m = matmul_d(matmul_d(sa_half, gb.cov, d), sa_half, d);
    // symmetrize against round-off before the eigensolve
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double s = 0.5 * (m[size_t(i) * d + j] + m[size_t(j) * d + i]);
            m[size_t(i) * d + j] = m[size_t(j) * d + i] = s;
        }
    std::vector<double> evals, evecs;
    jacobi_eigen(m, d, evals, evecs);
    double tr_sqrt = 0;
    for (double e : evals) tr_sqrt += std::sqrt(std::max(0.0, e));

    const double fid = mean_term + tr_a + tr_b - 2.0 * tr_sqrt;
    return std::max(0.0, fid);
}

double is_proxy(const std::vector<std::vector<real>>& class_probs) {
    require(class_probs.size() >= 2, "is_proxy: need at least 2 samples");
    const size_t k = class_probs[0].size();
    std::vector<double> marginal(k, 0.0);
    for (const auto& p : class_probs)
        for (size_t j = 0; j < k; ++j) marginal[j] += double(p[j]);
    for (auto& m : marginal) m /= double(class_probs.size());
    double kl_sum = 0;
    for (const auto& p : class_probs) {
        double kl = 0;
        for (size_t j = 0; j < k; ++j) {
            const double pj = double(p[j]);
            if (pj > 1e-12) kl += pj * std::log(pj / std::max(1e-12, marginal[j]));
        }
        kl_sum += kl;
    }
    return std::exp(kl_sum / double(class_probs.size()));
}

double mm_relevance(const ModalContent& predicted, const ModalContent& gold) {
    require(predicted.text || predicted.image, "mm_relevance: empty prediction");
    require(gold.text || gold.image, "mm_relevance: empty gold");

    const double text_sim =
        predicted.text && gold.text ? rouge_l(*predicted.text, *gold.text) : 0.0;
    double image_sim = 0.0;
    if (predicted.image && gold.image) {
        const synth::SceneState gold_scene = synth::parse_image(*gold.image);
        image_sim = gold_scene.objects.empty() ? 0.0
                                               : attribute_accuracy(*predicted.image, gold_scene);
    }

    double precision = 0;
    int pred_modalities = 0;
    if (predicted.text) {
        precision += text_sim;
        ++pred_modalities;
    }
    if (predicted.image) {
        precision += image_sim;
        ++pred_modalities;
    }
    precision /= pred_modalities;

    double recall = 0;
    int gold_modalities = 0;
    if (gold.text) {
        recall += text_sim;
        ++gold_modalities;
    }
    if (gold.image) {
        recall += image_sim;
        ++gold_modalities;
    }
    recall /= gold_modalities;

    if (precision + recall == 0) return 0;
    return 2 * precision * recall / (precision + recall);
}

}  // namespace voken::eval
