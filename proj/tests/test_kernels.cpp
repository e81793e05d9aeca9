#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "voken/core/rng.hpp"
#include "voken/kernels/kernels.hpp"
#include "voken/kernels/reference.hpp"

using namespace voken;
namespace ker = voken::kernels;

namespace {

std::vector<real> random_vec(size_t n, Rng& rng, real s = 1) {
    std::vector<real> v(n);
    for (auto& x : v) x = rng.normal(0, s);
    return v;
}

void check_close(const std::vector<real>& a, const std::vector<real>& b, real tol) {
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        const real denom = std::max(real(1), std::max(std::fabs(real(a[i])), std::fabs(real(b[i]))));
        REQUIRE(std::fabs(a[i] - b[i]) / denom < tol);
    }
}

}  // namespace

TEST_CASE("matmul variants agree with serial reference") {
    Rng rng(7);
    const int m = 33, k = 47, n = 29;
    auto a = random_vec(size_t(m) * k, rng);
    auto b = random_vec(size_t(k) * n, rng);
    auto bt = random_vec(size_t(n) * k, rng);
    auto at = random_vec(size_t(k) * m, rng);

    std::vector<real> c0(size_t(m) * n), c1(size_t(m) * n);
    ker::matmul_nn(a.data(), b.data(), c0.data(), m, k, n);
    ker::ref::matmul_nn(a.data(), b.data(), c1.data(), m, k, n);
    check_close(c0, c1, real(1e-5));

    ker::matmul_nt(a.data(), bt.data(), c0.data(), m, k, n);
    ker::ref::matmul_nt(a.data(), bt.data(), c1.data(), m, k, n);
    check_close(c0, c1, real(1e-5));

    ker::matmul_tn(at.data(), b.data(), c0.data(), m, k, n);
    ker::ref::matmul_tn(at.data(), b.data(), c1.data(), m, k, n);
    check_close(c0, c1, real(1e-5));
}

TEST_CASE("matmul accumulate flag adds to destination") {
    Rng rng(3);
    const int m = 5, k = 8, n = 6;
    auto a = random_vec(size_t(m) * k, rng);
    auto b = random_vec(size_t(k) * n, rng);
    std::vector<real> base(size_t(m) * n, real(0.5)), once(size_t(m) * n);
    ker::matmul_nn(a.data(), b.data(), once.data(), m, k, n);
    ker::matmul_nn(a.data(), b.data(), base.data(), m, k, n, true);
    for (size_t i = 0; i < base.size(); ++i)
        REQUIRE(base[i] == doctest::Approx(once[i] + real(0.5)).epsilon(1e-5));
}

TEST_CASE("softmax rows agrees with reference and sums to one") {
    Rng rng(11);
    const int m = 17, n = 23;
    auto x = random_vec(size_t(m) * n, rng, 3);
    auto y0 = x, y1 = x;
    ker::softmax_rows(y0.data(), m, n);
    ker::ref::softmax_rows(y1.data(), m, n);
    check_close(y0, y1, real(1e-6));
    for (int i = 0; i < m; ++i) {
        real s = 0;
        for (int j = 0; j < n; ++j) s += y0[size_t(i) * n + j];
        REQUIRE(s == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("layernorm and groupnorm agree with reference") {
    Rng rng(13);
    const int m = 9, n = 32;
    auto x = random_vec(size_t(m) * n, rng);
    auto gamma = random_vec(n, rng);
    auto beta = random_vec(n, rng);
    std::vector<real> y0(x.size()), y1(x.size()), mean(m), rstd(m);
    ker::layernorm(x.data(), gamma.data(), beta.data(), y0.data(), mean.data(), rstd.data(), m, n,
                   real(1e-5));
    ker::ref::layernorm(x.data(), gamma.data(), beta.data(), y1.data(), m, n, real(1e-5));
    check_close(y0, y1, real(1e-5));

    const int c = 16, hw = 25, groups = 4;
    auto xc = random_vec(size_t(c) * hw, rng);
    auto gc = random_vec(c, rng);
    auto bc = random_vec(c, rng);
    std::vector<real> z0(xc.size()), z1(xc.size()), gm(groups), gr(groups);
    ker::groupnorm(xc.data(), gc.data(), bc.data(), z0.data(), gm.data(), gr.data(), c, hw, groups,
                   real(1e-5));
    ker::ref::groupnorm(xc.data(), gc.data(), bc.data(), z1.data(), c, hw, groups, real(1e-5));
    check_close(z0, z1, real(1e-5));
}

TEST_CASE("im2col conv path matches direct reference convolution") {
    Rng rng(17);
    const int cin = 5, h = 12, w = 10, cout = 7, kh = 3, kw = 3;
    for (int stride : {1, 2}) {
        const int pad = 1;
        const int oh = (h + 2 * pad - kh) / stride + 1;
        const int ow = (w + 2 * pad - kw) / stride + 1;
        auto x = random_vec(size_t(cin) * h * w, rng);
        auto wgt = random_vec(size_t(cout) * cin * kh * kw, rng);
        auto b = random_vec(cout, rng);

        std::vector<real> col(size_t(cin) * kh * kw * oh * ow);
        ker::im2col(x.data(), col.data(), cin, h, w, kh, kw, stride, pad, oh, ow);
        std::vector<real> y0(size_t(cout) * oh * ow);
        ker::matmul_nn(wgt.data(), col.data(), y0.data(), cout, cin * kh * kw, oh * ow);
        for (int co = 0; co < cout; ++co)
            for (int i = 0; i < oh * ow; ++i) y0[size_t(co) * oh * ow + i] += b[co];

        std::vector<real> y1(y0.size());
        ker::ref::conv2d(x.data(), wgt.data(), b.data(), y1.data(), cin, h, w, cout, kh, kw, stride,
                         pad);
        check_close(y0, y1, real(1e-5));
    }
}

TEST_CASE("col2im is the adjoint of im2col") {
    // <im2col(x), c> == <x, col2im(c)> for random c: validates the scatter
    Rng rng(19);
    const int cin = 3, h = 8, w = 8, kh = 3, kw = 3, stride = 2, pad = 1;
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (w + 2 * pad - kw) / stride + 1;
    auto x = random_vec(size_t(cin) * h * w, rng);
    auto c = random_vec(size_t(cin) * kh * kw * oh * ow, rng);
    std::vector<real> col(c.size());
    ker::im2col(x.data(), col.data(), cin, h, w, kh, kw, stride, pad, oh, ow);
    std::vector<real> back(x.size(), 0);
    ker::col2im_acc(c.data(), back.data(), cin, h, w, kh, kw, stride, pad, oh, ow);
    real lhs = 0, rhs = 0;
    for (size_t i = 0; i < col.size(); ++i) lhs += col[i] * c[i];
    for (size_t i = 0; i < x.size(); ++i) rhs += x[i] * back[i];
    REQUIRE(lhs == doctest::Approx(rhs).epsilon(1e-4));
}

TEST_CASE("upsample and activations agree with reference") {
    Rng rng(23);
    const int c = 4, h = 6, w = 5;
    auto x = random_vec(size_t(c) * h * w, rng);
    std::vector<real> y0(size_t(c) * 4 * h * w), y1(y0.size());
    ker::upsample2x(x.data(), y0.data(), c, h, w);
    ker::ref::upsample2x(x.data(), y1.data(), c, h, w);
    for (size_t i = 0; i < y0.size(); ++i) REQUIRE(y0[i] == y1[i]);

    auto v = random_vec(1000, rng, 2);
    std::vector<real> g0(v.size()), g1(v.size()), s0(v.size()), s1(v.size());
    ker::gelu(v.data(), g0.data(), int64_t(v.size()));
    ker::ref::gelu(v.data(), g1.data(), int64_t(v.size()));
    ker::silu(v.data(), s0.data(), int64_t(v.size()));
    ker::ref::silu(v.data(), s1.data(), int64_t(v.size()));
    check_close(g0, g1, real(1e-6));
    check_close(s0, s1, real(1e-6));
}

TEST_CASE("kernel results are identical when called inside a parallel region") {
    Rng rng(29);
    const int m = 64, k = 64, n = 64;
    auto a = random_vec(size_t(m) * k, rng);
    auto b = random_vec(size_t(k) * n, rng);
    std::vector<real> outer(size_t(m) * n), inner(size_t(m) * n);
    ker::matmul_nn(a.data(), b.data(), outer.data(), m, k, n);
#pragma omp parallel
    {
#pragma omp single
        ker::matmul_nn(a.data(), b.data(), inner.data(), m, k, n);
    }
    for (size_t i = 0; i < outer.size(); ++i) REQUIRE(outer[i] == inner[i]);
}
