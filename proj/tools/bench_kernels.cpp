// Times the OpenMP kernels against their serial reference implementations on
// the shapes this pipeline actually runs (transformer projections, U-Net
// im2col matmuls, row softmax/norms) and reports GFLOP/s plus speedup.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "voken/core/rng.hpp"
#include "voken/kernels/kernels.hpp"
#include "voken/kernels/reference.hpp"

using namespace voken;
namespace ker = voken::kernels;

namespace {

using Clock = std::chrono::steady_clock;

double time_of(const std::function<void()>& fn, int reps) {
    fn();  // warmup
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = Clock::now();
    return std::chrono::duration<double>(t1 - t0).count() / reps;
}

std::vector<real> randv(size_t n, Rng& rng) {
    std::vector<real> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

void bench_matmul(const char* label, int m, int k, int n, int reps) {
    Rng rng(1);
    auto a = randv(size_t(m) * k, rng);
    auto b = randv(size_t(k) * n, rng);
    std::vector<real> c(size_t(m) * n);
    const double flops = 2.0 * m * k * n;

    const double t_omp = time_of([&] { ker::matmul_nn(a.data(), b.data(), c.data(), m, k, n); },
                                 reps);
    const double t_ref =
        time_of([&] { ker::ref::matmul_nn(a.data(), b.data(), c.data(), m, k, n); }, reps);
    std::printf("%-28s omp %7.2f GF/s  serial %7.2f GF/s  speedup %.2fx\n", label,
                flops / t_omp / 1e9, flops / t_ref / 1e9, t_ref / t_omp);
}

void bench_conv(int cin, int hw, int cout, int reps) {
    Rng rng(2);
    const int kh = 3, kw = 3, stride = 1, pad = 1;
    const int oh = hw, ow = hw;
    auto x = randv(size_t(cin) * hw * hw, rng);
    auto w = randv(size_t(cout) * cin * kh * kw, rng);
    auto b = randv(size_t(cout), rng);
    std::vector<real> col(size_t(cin) * kh * kw * oh * ow);
    std::vector<real> y(size_t(cout) * oh * ow);
    const double flops = 2.0 * cout * cin * kh * kw * oh * ow;

    const double t_omp = time_of(
        [&] {
            ker::im2col(x.data(), col.data(), cin, hw, hw, kh, kw, stride, pad, oh, ow);
            ker::matmul_nn(w.data(), col.data(), y.data(), cout, cin * kh * kw, oh * ow);
        },
        reps);
    const double t_ref = time_of(
        [&] {
            ker::ref::conv2d(x.data(), w.data(), b.data(), y.data(), cin, hw, hw, cout, kh, kw,
                             stride, pad);
        },
        reps);
    std::printf("conv3x3 %3dx%2dx%2d -> %-3d      omp %7.2f GF/s  serial %7.2f GF/s  speedup %.2fx\n",
                cin, hw, hw, cout, flops / t_omp / 1e9, flops / t_ref / 1e9, t_ref / t_omp);
}

void bench_rows(const char* label, int m, int n, int reps,
                const std::function<void(real*, int, int)>& omp_fn,
                const std::function<void(real*, int, int)>& ref_fn) {
    Rng rng(3);
    auto x = randv(size_t(m) * n, rng);
    auto y = x;
    const double t_omp = time_of([&] { y = x; omp_fn(y.data(), m, n); }, reps);
    const double t_ref = time_of([&] { y = x; ref_fn(y.data(), m, n); }, reps);
    std::printf("%-28s omp %8.1f us       serial %8.1f us     speedup %.2fx\n", label,
                t_omp * 1e6, t_ref * 1e6, t_ref / t_omp);
}

}  // namespace

int main() {
    std::printf("threads: %d\n\n", ker::max_threads());

    // LM projection shapes (sequence x width)
    bench_matmul("matmul 112x128x128 (lm qkv)", 112, 128, 128, 200);
    bench_matmul("matmul 112x128x512 (lm ffn)", 112, 128, 512, 100);
    // U-Net im2col shapes
    bench_matmul("matmul 32x288x1024 (unet32)", 32, 288, 1024, 50);
    bench_matmul("matmul 64x576x256  (unet16)", 64, 576, 256, 50);
    bench_matmul("matmul 128x1152x64 (unet8)", 128, 1152, 64, 50);
    std::printf("\n");

    bench_conv(32, 32, 32, 50);
    bench_conv(64, 16, 64, 50);
    bench_conv(128, 8, 128, 50);
    std::printf("\n");

    bench_rows("softmax rows 1024x64", 1024, 64, 200,
               [](real* p, int m, int n) { ker::softmax_rows(p, m, n); },
               [](real* p, int m, int n) { ker::ref::softmax_rows(p, m, n); });

    {
        Rng rng(4);
        const int m = 1024, n = 64;
        auto x = randv(size_t(m) * n, rng);
        auto g = randv(size_t(n), rng);
        auto b = randv(size_t(n), rng);
        std::vector<real> y(x.size()), mean(m), rstd(m);
        const double t_omp = time_of(
            [&] {
                ker::layernorm(x.data(), g.data(), b.data(), y.data(), mean.data(), rstd.data(),
                               m, n, real(1e-5));
            },
            200);
        const double t_ref = time_of(
            [&] { ker::ref::layernorm(x.data(), g.data(), b.data(), y.data(), m, n, real(1e-5)); },
            200);
        std::printf("%-28s omp %8.1f us       serial %8.1f us     speedup %.2fx\n",
                    "layernorm 1024x64", t_omp * 1e6, t_ref * 1e6, t_ref / t_omp);
    }
    return 0;
}
