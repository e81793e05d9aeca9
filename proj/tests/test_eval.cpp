#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "voken/core/rng.hpp"
#include "voken/eval/metrics.hpp"

using namespace voken;
using namespace voken::eval;

namespace {

// --- independent linear-algebra oracle: Denman-Beavers square root ---

std::vector<double> gauss_jordan_inverse(std::vector<double> a, int n) {
    std::vector<double> inv(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[size_t(i) * n + i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a[size_t(r) * n + col]) > std::fabs(a[size_t(piv) * n + col])) piv = r;
        REQUIRE(std::fabs(a[size_t(piv) * n + col]) > 1e-12);
        if (piv != col)
            for (int j = 0; j < n; ++j) {
                std::swap(a[size_t(piv) * n + j], a[size_t(col) * n + j]);
                std::swap(inv[size_t(piv) * n + j], inv[size_t(col) * n + j]);
            }
        const double d = a[size_t(col) * n + col];
        for (int j = 0; j < n; ++j) {
            a[size_t(col) * n + j] /= d;
            inv[size_t(col) * n + j] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[size_t(r) * n + col];
            if (f == 0) continue;
            for (int j = 0; j < n; ++j) {
                a[size_t(r) * n + j] -= f * a[size_t(col) * n + j];
                inv[size_t(r) * n + j] -= f * inv[size_t(col) * n + j];
            }
        }
    }
    return inv;
}

std::vector<double> matmul_d(const std::vector<double>& a, const std::vector<double>& b, int n) {
    std::vector<double> c(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                c[size_t(i) * n + j] += a[size_t(i) * n + k] * b[size_t(k) * n + j];
    return c;
}

std::vector<double> denman_beavers_sqrt(const std::vector<double>& a, int n) {
    std::vector<double> y = a, z(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) z[size_t(i) * n + i] = 1.0;
    for (int it = 0; it < 60; ++it) {
        const auto yi = gauss_jordan_inverse(y, n);
        const auto zi = gauss_jordan_inverse(z, n);
        std::vector<double> y2(size_t(n) * n), z2(size_t(n) * n);
        for (size_t k = 0; k < y.size(); ++k) {
            y2[k] = 0.5 * (y[k] + zi[k]);
            z2[k] = 0.5 * (z[k] + yi[k]);
        }
        y = y2;
        z = z2;
    }
    return y;
}

// independent whole-FID oracle built on Denman-Beavers
double fid_oracle(const std::vector<std::vector<real>>& sa,
                  const std::vector<std::vector<real>>& sb) {
    const int n = int(sa.size()), d = int(sa[0].size());
    auto fit = [d](const std::vector<std::vector<real>>& s, std::vector<double>& mu,
                   std::vector<double>& cov) {
        mu.assign(size_t(d), 0.0);
        for (const auto& x : s)
            for (int j = 0; j < d; ++j) mu[size_t(j)] += double(x[size_t(j)]);
        for (auto& m : mu) m /= double(s.size());
        cov.assign(size_t(d) * d, 0.0);
        for (const auto& x : s)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    cov[size_t(i) * d + j] += (double(x[size_t(i)]) - mu[size_t(i)]) *
                                              (double(x[size_t(j)]) - mu[size_t(j)]);
        for (auto& c : cov) c /= double(s.size() - 1);
    };
    std::vector<double> mu_a, cov_a, mu_b, cov_b;
    fit(sa, mu_a, cov_a);
    fit(sb, mu_b, cov_b);
    (void)n;
    double mean_term = 0, tr = 0;
    for (int i = 0; i < d; ++i) mean_term += (mu_a[size_t(i)] - mu_b[size_t(i)]) *
                                             (mu_a[size_t(i)] - mu_b[size_t(i)]);
    const auto prod = matmul_d(cov_a, cov_b, d);
    const auto root = denman_beavers_sqrt(prod, d);
    for (int i = 0; i < d; ++i)
        tr += cov_a[size_t(i) * d + i] + cov_b[size_t(i) * d + i] - 2.0 * root[size_t(i) * d + i];
    return mean_term + tr;
}

}  // namespace

TEST_CASE("bleu closed forms") {
    CHECK(bleu("a red circle", {"a red circle"}, 1) == doctest::Approx(1.0));
    CHECK(bleu("a red circle", {"a red circle"}, 2) == doctest::Approx(1.0));
    CHECK(bleu("", {"a red circle"}, 1) == doctest::Approx(0.0));

    // candidate shorter than the reference: full precision, brevity penalty
    // exp(1 - 7/4) (hand-computed: 4 matched unigrams of 4; r=7, c=4)
    const double b1 = bleu("the red circle moves", {"the red circle moves to row 2"}, 1);
    CHECK(b1 == doctest::Approx(std::exp(1.0 - 7.0 / 4.0)).epsilon(1e-9));

    // clipping: "red" appears twice in the candidate, once in the reference;
    // p1 = 3/4, p2 = 2/3, no penalty (c > r): sqrt(0.5) (hand-computed)
    const double b2 = bleu("the red red circle", {"the red circle"}, 2);
    CHECK(b2 == doctest::Approx(std::sqrt(0.5)).epsilon(1e-9));

    CHECK(bleu("x y z", {"a b c"}, 1) == doctest::Approx(0.0));
    CHECK_THROWS(bleu("a", {}, 1));
    CHECK_THROWS(bleu("a", {"a"}, 3));
}

TEST_CASE("rouge_l closed forms") {
    CHECK(rouge_l("a b c", "a b c") == doctest::Approx(1.0));
    CHECK(rouge_l("x y", "a b") == doctest::Approx(0.0));
    // LCS("a b c d", "a c e") = 2; P = 2/4, R = 2/3, F1 = 0.5714...
    CHECK(rouge_l("a b c d", "a c e") == doctest::Approx(4.0 / 7.0).epsilon(1e-9));
    CHECK(rouge_l("", "a") == doctest::Approx(0.0));
}

TEST_CASE("attribute accuracy closed forms") {
    synth::SceneState target;
    target.objects.push_back({synth::ObjShape::circle, synth::ObjColor::red, 0, 0});
    target.objects.push_back({synth::ObjShape::square, synth::ObjColor::green, 1, 1});
    target.objects.push_back({synth::ObjShape::triangle, synth::ObjColor::blue, 2, 2});

    CHECK(attribute_accuracy(synth::render(target), target) == doctest::Approx(1.0));

    synth::Image gray;
    gray.pix.assign(size_t(3) * 32 * 32, synth::kGray);
    CHECK(attribute_accuracy(gray, target) == doctest::Approx(0.0));

    // one recolored object among three: 8 of 9 attributes match
    synth::SceneState recolored = target;
    recolored.objects[1].color = synth::ObjColor::yellow;
    CHECK(attribute_accuracy(synth::render(recolored), target) ==
          doctest::Approx(8.0 / 9.0).epsilon(1e-9));

    // CLIP-T proxy routes through the caption grammar inverse
    CHECK(attribute_accuracy_text(synth::render(target), synth::caption(target)) ==
          doctest::Approx(1.0));
}

TEST_CASE("jacobi eigendecomposition reconstructs the input") {
    Rng rng(1);
    const int n = 12;
    std::vector<double> a(size_t(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            const double v = double(rng.normal());
            a[size_t(i) * n + j] = a[size_t(j) * n + i] = v;
        }
    const std::vector<double> orig = a;
    std::vector<double> evals, evecs;
    jacobi_eigen(a, n, evals, evecs);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double r = 0;
            for (int k = 0; k < n; ++k)
                r += evecs[size_t(i) * n + k] * evals[size_t(k)] * evecs[size_t(j) * n + k];
            CHECK(r == doctest::Approx(orig[size_t(i) * n + j]).epsilon(1e-8));
        }
}

TEST_CASE("fid: identity, symmetry, equal-covariance closed form") {
    Rng rng(2);
    const int d = 4;
    std::vector<std::vector<real>> a, b;
    for (int i = 0; i < 10000; ++i) {
        std::vector<real> xa(d), xb(d);
        for (int j = 0; j < d; ++j) {
            xa[size_t(j)] = rng.normal();
            xb[size_t(j)] = rng.normal();
        }
        xb[0] += 2;  // mean offset delta = 2 in one coordinate
        a.push_back(xa);
        b.push_back(xb);
    }
    CHECK(fid_proxy(a, a) == doctest::Approx(0.0).epsilon(1e-6));

    const double fab = fid_proxy(a, b);
    const double fba = fid_proxy(b, a);
    CHECK(std::fabs(fab - fba) < 1e-6);
    CHECK(fab == doctest::Approx(4.0).epsilon(0.02));  // delta^2
}

TEST_CASE("fid agrees with an independent Denman-Beavers implementation") {
    Rng rng(3);
    const int d = 8, n = 60;
    std::vector<std::vector<real>> a, b;
    for (int i = 0; i < n; ++i) {
        std::vector<real> xa(d), xb(d);
        for (int j = 0; j < d; ++j) {
            xa[size_t(j)] = rng.normal() + real(0.1) * real(j);
            xb[size_t(j)] = real(1.3) * rng.normal() - real(0.2) * real(j);
        }
        a.push_back(xa);
        b.push_back(xb);
    }
    const double mine = fid_proxy(a, b);
    const double oracle = fid_oracle(a, b);
    CHECK(std::fabs(mine - oracle) / std::max(1.0, std::fabs(oracle)) < 1e-4);
}

TEST_CASE("fid shrinkage on small sets is applied and reported") {
    Rng rng(4);
    std::vector<std::vector<real>> a, b;
    for (int i = 0; i < 5; ++i) {  // 5 samples, 8-dim: degenerate covariance
        std::vector<real> xa(8), xb(8);
        for (int j = 0; j < 8; ++j) {
            xa[size_t(j)] = rng.normal();
            xb[size_t(j)] = rng.normal();
        }
        a.push_back(xa);
        b.push_back(xb);
    }
    bool shrunk = false;
    const double f = fid_proxy(a, b, &shrunk);
    CHECK(shrunk);
    CHECK(f >= 0);
}

TEST_CASE("is_proxy closed forms and independent recomputation") {
    // all images identical: KL = 0, IS = 1
    std::vector<std::vector<real>> same(10, {real(0.2), real(0.5), real(0.3)});
    CHECK(is_proxy(same) == doctest::Approx(1.0).epsilon(1e-9));

    // perfect one-hot, uniform over 3 classes: IS = 3
    std::vector<std::vector<real>> onehot;
    for (int i = 0; i < 9; ++i) {
        std::vector<real> p(3, 0);
        p[size_t(i % 3)] = 1;
        onehot.push_back(p);
    }
    CHECK(is_proxy(onehot) == doctest::Approx(3.0).epsilon(1e-9));

    // random softmax sets: independent direct computation
    Rng rng(5);
    std::vector<std::vector<real>> probs;
    for (int i = 0; i < 40; ++i) {
        std::vector<real> p(3);
        real z = 0;
        for (auto& x : p) {
            x = std::exp(rng.normal());
            z += x;
        }
        for (auto& x : p) x /= z;
        probs.push_back(p);
    }
    std::vector<double> marg(3, 0.0);
    for (const auto& p : probs)
        for (int j = 0; j < 3; ++j) marg[size_t(j)] += double(p[size_t(j)]) / double(probs.size());
    double kl = 0;
    for (const auto& p : probs)
        for (int j = 0; j < 3; ++j)
            kl += double(p[size_t(j)]) * std::log(double(p[size_t(j)]) / marg[size_t(j)]);
    const double expect = std::exp(kl / double(probs.size()));
    CHECK(is_proxy(probs) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("mm_relevance closed forms and random-case oracle") {
    const synth::SceneState scene = synth::gen_scene(12, 2);
    const synth::Image img = synth::render(scene);
    const std::string text = "the story continues nicely";

    ModalContent both{text, img};
    CHECK(mm_relevance(both, both) == doctest::Approx(1.0));

    // gold text-only, predicted text+image with matching text: F1 = 2/3
    ModalContent gold_text{text, std::nullopt};
    CHECK(mm_relevance(both, gold_text) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));

    CHECK_THROWS(mm_relevance(ModalContent{}, both));

    // random perturbations against a direct recomputation of the formula
    Rng rng(6);
    for (int trial = 0; trial < 30; ++trial) {
        const synth::SceneState sg = synth::gen_scene(100 + uint64_t(trial), 3);
        synth::SceneState sp = sg;
        if (!sp.objects.empty() && rng.bernoulli(real(0.5)))
            sp.objects[0].color = synth::ObjColor(int(rng.uniform_int(4)));
        const synth::Image ig = synth::render(sg);
        const synth::Image ip = synth::render(sp);
        const std::string tg = synth::caption(sg);
        const std::string tp = synth::caption(sp);

        const bool pred_has_text = rng.bernoulli(real(0.7));
        const bool gold_has_image = rng.bernoulli(real(0.7));
        ModalContent pred{pred_has_text ? std::optional<std::string>(tp) : std::nullopt,
                          std::optional<synth::Image>(ip)};
        ModalContent gold{std::optional<std::string>(tg),
                          gold_has_image ? std::optional<synth::Image>(ig) : std::nullopt};

        const double ts = pred_has_text ? rouge_l(tp, tg) : 0.0;
        const double is = gold_has_image ? attribute_accuracy(ip, synth::parse_image(ig)) : 0.0;
        const double prec = (ts * pred_has_text + is) / (int(pred_has_text) + 1);
        const double rec = (ts + is * gold_has_image) / (1 + int(gold_has_image));
        const double expect = prec + rec == 0 ? 0.0 : 2 * prec * rec / (prec + rec);
        CHECK(mm_relevance(pred, gold) == doctest::Approx(expect).epsilon(1e-9));
    }
}
