#include "voken/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace voken::kernels {

bool parallel_ok() {
#ifdef _OPENMP
    return !omp_in_parallel();
#else
    return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void matmul_nn(const real* a, const real* b, real* c, int m, int k, int n, bool acc) {
#pragma omp parallel for schedule(static) if (parallel_ok() && m >= 4)
    for (int i = 0; i < m; ++i) {
        real* ci = c + size_t(i) * n;
        if (!acc) std::fill(ci, ci + n, real(0));
        const real* ai = a + size_t(i) * k;
        for (int kk = 0; kk < k; ++kk) {
            const real aik = ai[kk];
            const real* bk = b + size_t(kk) * n;
            for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
        }
    }
}

namespace {

// dot product with split accumulators: fixed summation order that the
// compiler can vectorize without reassociating across lanes
inline real dot_split(const real* x, const real* y, int k) {
    real acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    const int k8 = k & ~7;
    for (int kk = 0; kk < k8; kk += 8)
        for (int u = 0; u < 8; ++u) acc[u] += x[kk + u] * y[kk + u];
    real s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (int kk = k8; kk < k; ++kk) s += x[kk] * y[kk];
    return s;
}

}  // namespace

void matmul_nt(const real* a, const real* b, real* c, int m, int k, int n, bool acc) {
    if (int64_t(m) * k * n >= 1 << 17 && k >= 16) {
        // transpose B once; the inner loop becomes streaming row updates
        std::vector<real> bt(size_t(k) * n);
#pragma omp parallel for schedule(static) if (parallel_ok() && k >= 32)
        for (int kk = 0; kk < k; ++kk) {
            real* row = bt.data() + size_t(kk) * n;
            for (int j = 0; j < n; ++j) row[j] = b[size_t(j) * k + kk];
        }
#pragma omp parallel for schedule(static) if (parallel_ok() && m >= 4)
        for (int i = 0; i < m; ++i) {
            real* ci = c + size_t(i) * n;
            if (!acc) std::fill(ci, ci + n, real(0));
            const real* ai = a + size_t(i) * k;
            for (int kk = 0; kk < k; ++kk) {
                const real aik = ai[kk];
                const real* bk = bt.data() + size_t(kk) * n;
                for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
            }
        }
        return;
    }
#pragma omp parallel for schedule(static) if (parallel_ok() && m >= 4)
    for (int i = 0; i < m; ++i) {
        const real* ai = a + size_t(i) * k;
        real* ci = c + size_t(i) * n;
        for (int j = 0; j < n; ++j) {
            const real s = dot_split(ai, b + size_t(j) * k, k);
            ci[j] = acc ? ci[j] + s : s;
        }
    }
}

void matmul_tn(const real* a, const real* b, real* c, int m, int k, int n, bool acc) {
#pragma omp parallel for schedule(static) if (parallel_ok() && m >= 4)
    for (int i = 0; i < m; ++i) {
        real* ci = c + size_t(i) * n;
        if (!acc) std::fill(ci, ci + n, real(0));
        for (int kk = 0; kk < k; ++kk) {
            const real aik = a[size_t(kk) * m + i];
            const real* bk = b + size_t(kk) * n;
            for (int j = 0; j < n; ++j) ci[j] += aik * bk[j];
        }
    }
}

void add_bias_rows(real* x, const real* b, int m, int n) {
#pragma omp parallel for schedule(static) if (parallel_ok() && m >= 16)
    for (int i = 0; i < m; ++i) {
        real* xi = x + size_t(i) * n;
        for (int j = 0; j < n; ++j) xi[j] += b[j];
    }
}

void bias_grad_rows(const real* dy, real* db, int m, int n) {
    for (int i = 0; i < m; ++i) {
        const real* di = dy + size_t(i) * n;
        for (int j = 0; j < n; ++j) db[j] += di[j];
    }
}

void softmax_rows(real* x, int m, int n) {
#pragma omp parallel for schedule(static) if (parallel_ok() && m >= 16)
    for (int i = 0; i < m; ++i) {
        real* xi = x + size_t(i) * n;
        real mx = xi[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, xi[j]);
        real sum = 0;
        for (int j = 0; j < n; ++j) {
            xi[j] = std::exp(xi[j] - mx);
            sum += xi[j];
        }
        const real inv = real(1) / sum;
        for (int j = 0; j < n; ++j) xi[j] *= inv;
    }
}

void softmax_rows_backward(const real* y, const real* dy, real* dx, int m, int n) {
#pragma omp parallel for schedule(static) if (parallel_ok() && m >= 16)
    for (int i = 0; i < m; ++i) {
        const real* yi = y + size_t(i) * n;
        const real* di = dy + size_t(i) * n;
        real* oi = dx + size_t(i) * n;
        real dot = 0;
        for (int j = 0; j < n; ++j) dot += di[j] * yi[j];
        for (int j = 0; j < n; ++j) oi[j] = (di[j] - dot) * yi[j];
    }
}

namespace {
constexpr real kGeluC = real(0.7978845608028654);  // sqrt(2/pi)
}

void gelu(const real* x, real* y, int64_t n) {
#pragma omp parallel for schedule(static) if (parallel_ok() && n >= 4096)
    for (int64_t i = 0; i < n; ++i) {
        const real v = x[i];
        const real t = std::tanh(kGeluC * (v + real(0.044715) * v * v * v));
        y[i] = real(0.5) * v * (real(1) + t);
    }
}

void gelu_backward(const real* x, const real* dy, real* dx, int64_t n) {
#pragma omp parallel for schedule(static) if (parallel_ok() && n >= 4096)
    for (int64_t i = 0; i < n; ++i) {
        const real v = x[i];
        const real u = kGeluC * (v + real(0.044715) * v * v * v);
        const real t = std::tanh(u);
        const real du = kGeluC * (real(1) + real(3) * real(0.044715) * v * v);
        const real g = real(0.5) * (real(1) + t) + real(0.5) * v * (real(1) - t * t) * du;
        dx[i] += dy[i] * g;
    }
}

void silu(const real* x, real* y, int64_t n) {
#pragma omp parallel for schedule(static) if (parallel_ok() && n >= 4096)
    for (int64_t i = 0; i < n; ++i) {
        const real s = real(1) / (real(1) + std::exp(-x[i]));
        y[i] = x[i] * s;
    }
}

void silu_backward(const real* x, const real* dy, real* dx, int64_t n) {
#pragma omp parallel for schedule(static) if (parallel_ok() && n >= 4096)
    for (int64_t i = 0; i < n; ++i) {
        const real s = real(1) / (real(1) + std::exp(-x[i]));
        dx[i] += dy[i] * (s + x[i] * s * (real(1) - s));
    }
}

void layernorm(const real* x, const real* gamma, const real* beta, real* y,
               real* mean, real* rstd, int m, int n, real eps) {
#pragma omp parallel for schedule(static) if (parallel_ok() && m >= 16)
    for (int i = 0; i < m; ++i) {
        const real* xi = x + size_t(i) * n;
        real* yi = y + size_t(i) * n;
        real mu = 0;
        for (int j = 0; j < n; ++j) mu += xi[j];
        mu /= real(n);
        real var = 0;
        for (int j = 0; j < n; ++j) {
            const real d = xi[j] - mu;
            var += d * d;
        }
        var /= real(n);
        const real r = real(1) / std::sqrt(var + eps);
        mean[i] = mu;
        rstd[i] = r;
        for (int j = 0; j < n; ++j) yi[j] = (xi[j] - mu) * r * gamma[j] + beta[j];
    }
}

void layernorm_backward(const real* x, const real* gamma, const real* mean,
                        const real* rstd, const real* dy, real* dx, real* dgamma,
                        real* dbeta, int m, int n) {
    // dgamma/dbeta reduced serially over rows to keep accumulation order fixed
    for (int i = 0; i < m; ++i) {
        const real* xi = x + size_t(i) * n;
        const real* di = dy + size_t(i) * n;
        const real mu = mean[i];
        const real r = rstd[i];
        if (dgamma) {
            for (int j = 0; j < n; ++j) {
                const real xh = (xi[j] - mu) * r;
                dgamma[j] += di[j] * xh;
                dbeta[j] += di[j];
            }
        }
    }
    if (!dx) return;
#pragma omp parallel for schedule(static) if (parallel_ok() && m >= 16)
    for (int i = 0; i < m; ++i) {
        const real* xi = x + size_t(i) * n;
        const real* di = dy + size_t(i) * n;
        real* oi = dx + size_t(i) * n;
        const real mu = mean[i];
        const real r = rstd[i];
        real s1 = 0, s2 = 0;
        for (int j = 0; j < n; ++j) {
            const real dh = di[j] * gamma[j];
            const real xh = (xi[j] - mu) * r;
            s1 += dh;
            s2 += dh * xh;
        }
        s1 /= real(n);
        s2 /= real(n);
        for (int j = 0; j < n; ++j) {
            const real dh = di[j] * gamma[j];
            const real xh = (xi[j] - mu) * r;
            oi[j] += (dh - s1 - xh * s2) * r;
        }
    }
}

void groupnorm(const real* x, const real* gamma, const real* beta, real* y,
               real* mean, real* rstd, int c, int hw, int groups, real eps) {
    const int cg = c / groups;
    const int64_t gsize = int64_t(cg) * hw;
#pragma omp parallel for schedule(static) if (parallel_ok() && groups >= 2)
    for (int g = 0; g < groups; ++g) {
        const real* xg = x + size_t(g) * gsize;
        real mu = 0;
        for (int64_t i = 0; i < gsize; ++i) mu += xg[i];
        mu /= real(gsize);
        real var = 0;
        for (int64_t i = 0; i < gsize; ++i) {
            const real d = xg[i] - mu;
            var += d * d;
        }
        var /= real(gsize);
        const real r = real(1) / std::sqrt(var + eps);
        mean[g] = mu;
        rstd[g] = r;
        for (int ci = 0; ci < cg; ++ci) {
            const int ch = g * cg + ci;
            const real* xc = x + size_t(ch) * hw;
            real* yc = y + size_t(ch) * hw;
            const real ga = gamma[ch], be = beta[ch];
            for (int i = 0; i < hw; ++i) yc[i] = (xc[i] - mu) * r * ga + be;
        }
    }
}

void groupnorm_backward(const real* x, const real* gamma, const real* mean,
                        const real* rstd, const real* dy, real* dx, real* dgamma,
                        real* dbeta, int c, int hw, int groups) {
    const int cg = c / groups;
    const int64_t gsize = int64_t(cg) * hw;
    if (dgamma) {
        for (int ch = 0; ch < c; ++ch) {
            const int g = ch / cg;
            const real mu = mean[g], r = rstd[g];
            const real* xc = x + size_t(ch) * hw;
            const real* dc = dy + size_t(ch) * hw;
            for (int i = 0; i < hw; ++i) {
                const real xh = (xc[i] - mu) * r;
                dgamma[ch] += dc[i] * xh;
                dbeta[ch] += dc[i];
            }
        }
    }
    if (!dx) return;
#pragma omp parallel for schedule(static) if (parallel_ok() && groups >= 2)
    for (int g = 0; g < groups; ++g) {
        const real mu = mean[g], r = rstd[g];
        real s1 = 0, s2 = 0;
        for (int ci = 0; ci < cg; ++ci) {
            const int ch = g * cg + ci;
            const real ga = gamma[ch];
            const real* xc = x + size_t(ch) * hw;
            const real* dc = dy + size_t(ch) * hw;
            for (int i = 0; i < hw; ++i) {
                const real dh = dc[i] * ga;
                s1 += dh;
                s2 += dh * (xc[i] - mu) * r;
            }
        }
        s1 /= real(gsize);
        s2 /= real(gsize);
        for (int ci = 0; ci < cg; ++ci) {
            const int ch = g * cg + ci;
            const real ga = gamma[ch];
            const real* xc = x + size_t(ch) * hw;
            const real* dc = dy + size_t(ch) * hw;
            real* oc = dx + size_t(ch) * hw;
            for (int i = 0; i < hw; ++i) {
                const real dh = dc[i] * ga;
                const real xh = (xc[i] - mu) * r;
                oc[i] += (dh - s1 - xh * s2) * r;
            }
        }
    }
}

void im2col(const real* x, real* col, int c, int h, int w, int kh, int kw,
            int stride, int pad, int oh, int ow) {
    const int ohw = oh * ow;
#pragma omp parallel for schedule(static) if (parallel_ok() && c >= 4)
    for (int ci = 0; ci < c; ++ci) {
        const real* xc = x + size_t(ci) * h * w;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                real* dst = col + (size_t(ci) * kh * kw + size_t(ky) * kw + kx) * ohw;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) {
                        std::fill(dst + size_t(oy) * ow, dst + size_t(oy + 1) * ow, real(0));
                        continue;
                    }
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        dst[size_t(oy) * ow + ox] =
                            (ix >= 0 && ix < w) ? xc[size_t(iy) * w + ix] : real(0);
                    }
                }
            }
        }
    }
}

void col2im_acc(const real* dcol, real* dx, int c, int h, int w, int kh, int kw,
                int stride, int pad, int oh, int ow) {
    const int ohw = oh * ow;
#pragma omp parallel for schedule(static) if (parallel_ok() && c >= 4)
    for (int ci = 0; ci < c; ++ci) {
        real* xc = dx + size_t(ci) * h * w;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                const real* src = dcol + (size_t(ci) * kh * kw + size_t(ky) * kw + kx) * ohw;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < w) xc[size_t(iy) * w + ix] += src[size_t(oy) * ow + ox];
                    }
                }
            }
        }
    }
}

void upsample2x(const real* x, real* y, int c, int h, int w) {
#pragma omp parallel for schedule(static) if (parallel_ok() && c >= 4)
    for (int ci = 0; ci < c; ++ci) {
        const real* xc = x + size_t(ci) * h * w;
        real* yc = y + size_t(ci) * 4 * h * w;
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                const real v = xc[size_t(i) * w + j];
                real* row0 = yc + size_t(2 * i) * 2 * w + 2 * j;
                real* row1 = row0 + size_t(2) * w;
                row0[0] = row0[1] = row1[0] = row1[1] = v;
            }
        }
    }
}

void upsample2x_backward(const real* dy, real* dx, int c, int h, int w) {
#pragma omp parallel for schedule(static) if (parallel_ok() && c >= 4)
    for (int ci = 0; ci < c; ++ci) {
        const real* dc = dy + size_t(ci) * 4 * h * w;
        real* xc = dx + size_t(ci) * h * w;
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                const real* row0 = dc + size_t(2 * i) * 2 * w + 2 * j;
                const real* row1 = row0 + size_t(2) * w;
                xc[size_t(i) * w + j] += row0[0] + row0[1] + row1[0] + row1[1];
            }
        }
    }
}

}  // namespace voken::kernels
