#include "voken/kernels/reference.hpp"

#include <algorithm>
#include <cmath>

namespace voken::kernels::ref {

void matmul_nn(const real* a, const real* b, real* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            real s = 0;
            for (int kk = 0; kk < k; ++kk) s += a[size_t(i) * k + kk] * b[size_t(kk) * n + j];
            c[size_t(i) * n + j] = s;
        }
    }
}

void matmul_nt(const real* a, const real* b, real* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            real s = 0;
            for (int kk = 0; kk < k; ++kk) s += a[size_t(i) * k + kk] * b[size_t(j) * k + kk];
            c[size_t(i) * n + j] = s;
        }
    }
}

void matmul_tn(const real* a, const real* b, real* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            real s = 0;
            for (int kk = 0; kk < k; ++kk) s += a[size_t(kk) * m + i] * b[size_t(kk) * n + j];
            c[size_t(i) * n + j] = s;
        }
    }
}

void softmax_rows(real* x, int m, int n) {
    for (int i = 0; i < m; ++i) {
        real* xi = x + size_t(i) * n;
        const real mx = *std::max_element(xi, xi + n);
        real sum = 0;
        for (int j = 0; j < n; ++j) {
            xi[j] = std::exp(xi[j] - mx);
            sum += xi[j];
        }
        for (int j = 0; j < n; ++j) xi[j] /= sum;
    }
}

void layernorm(const real* x, const real* gamma, const real* beta, real* y,
               int m, int n, real eps) {
    for (int i = 0; i < m; ++i) {
        const real* xi = x + size_t(i) * n;
        real mu = 0;
        for (int j = 0; j < n; ++j) mu += xi[j];
        mu /= real(n);
        real var = 0;
        for (int j = 0; j < n; ++j) var += (xi[j] - mu) * (xi[j] - mu);
        var /= real(n);
        const real r = real(1) / std::sqrt(var + eps);
        for (int j = 0; j < n; ++j) y[size_t(i) * n + j] = (xi[j] - mu) * r * gamma[j] + beta[j];
    }
}

void groupnorm(const real* x, const real* gamma, const real* beta, real* y,
               int c, int hw, int groups, real eps) {
    const int cg = c / groups;
    for (int g = 0; g < groups; ++g) {
        real mu = 0, var = 0;
        for (int ci = 0; ci < cg; ++ci)
            for (int i = 0; i < hw; ++i) mu += x[size_t(g * cg + ci) * hw + i];
        mu /= real(cg) * real(hw);
        for (int ci = 0; ci < cg; ++ci)
            for (int i = 0; i < hw; ++i) {
                const real d = x[size_t(g * cg + ci) * hw + i] - mu;
                var += d * d;
            }
        var /= real(cg) * real(hw);
        const real r = real(1) / std::sqrt(var + eps);
        for (int ci = 0; ci < cg; ++ci) {
            const int ch = g * cg + ci;
            for (int i = 0; i < hw; ++i)
                y[size_t(ch) * hw + i] = (x[size_t(ch) * hw + i] - mu) * r * gamma[ch] + beta[ch];
        }
    }
}

void conv2d(const real* x, const real* wgt, const real* b, real* y, int cin,
            int h, int w, int cout, int kh, int kw, int stride, int pad) {
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (w + 2 * pad - kw) / stride + 1;
    for (int co = 0; co < cout; ++co) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                real s = b ? b[co] : real(0);
                for (int ci = 0; ci < cin; ++ci) {
                    for (int ky = 0; ky < kh; ++ky) {
                        const int iy = oy * stride + ky - pad;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            const int ix = ox * stride + kx - pad;
                            if (ix < 0 || ix >= w) continue;
                            s += x[(size_t(ci) * h + iy) * w + ix] *
                                 wgt[((size_t(co) * cin + ci) * kh + ky) * kw + kx];
                        }
                    }
                }
                y[(size_t(co) * oh + oy) * ow + ox] = s;
            }
        }
    }
}

void upsample2x(const real* x, real* y, int c, int h, int w) {
    for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < 2 * h; ++i)
            for (int j = 0; j < 2 * w; ++j)
                y[(size_t(ci) * 2 * h + i) * 2 * w + j] = x[(size_t(ci) * h + i / 2) * w + j / 2];
}

void gelu(const real* x, real* y, int64_t n) {
    const real c = real(0.7978845608028654);
    for (int64_t i = 0; i < n; ++i) {
        const real v = x[i];
        y[i] = real(0.5) * v * (real(1) + std::tanh(c * (v + real(0.044715) * v * v * v)));
    }
}

void silu(const real* x, real* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] = x[i] / (real(1) + std::exp(-x[i]));
}

}  // namespace voken::kernels::ref
