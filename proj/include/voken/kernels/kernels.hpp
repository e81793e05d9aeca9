#pragma once

#include "voken/core/types.hpp"

// OpenMP-parallel compute kernels. Every parallel loop assigns each output
// element to exactly one thread and reduces over a fixed serial order inside,
// so results are bit-identical for any thread count. Kernels fall back to
// serial execution when called from inside an existing parallel region
// (e.g. when the sampler parallelizes across images).
//
// Serial reference implementations live in voken::kernels::ref
// (reference.hpp) and are compared against these in tests and in the
// bench_kernels tool.

namespace voken::kernels {

bool parallel_ok();
int max_threads();

// C[M,N] = A[M,K] * B[K,N]            (acc: +=)
void matmul_nn(const real* a, const real* b, real* c, int m, int k, int n, bool acc = false);
// C[M,N] = A[M,K] * B[N,K]^T
void matmul_nt(const real* a, const real* b, real* c, int m, int k, int n, bool acc = false);
// C[M,N] = A[K,M]^T * B[K,N]
void matmul_tn(const real* a, const real* b, real* c, int m, int k, int n, bool acc = false);

// y = x + b per row: x[M,N], b[N]
void add_bias_rows(real* x, const real* b, int m, int n);
// db[N] += sum over rows of dy[M,N]
void bias_grad_rows(const real* dy, real* db, int m, int n);

// row-wise softmax in place: x[M,N]
void softmax_rows(real* x, int m, int n);
// dx = (dy - rowdot(dy,y)) * y, all [M,N]; dx may alias dy
void softmax_rows_backward(const real* y, const real* dy, real* dx, int m, int n);

// elementwise activations; dx accumulates
void gelu(const real* x, real* y, int64_t n);
void gelu_backward(const real* x, const real* dy, real* dx, int64_t n);
void silu(const real* x, real* y, int64_t n);
void silu_backward(const real* x, const real* dy, real* dx, int64_t n);

// layer norm over last dim: x[M,N], gamma[N], beta[N]; saves mean/rstd per row
void layernorm(const real* x, const real* gamma, const real* beta, real* y,
               real* mean, real* rstd, int m, int n, real eps);
void layernorm_backward(const real* x, const real* gamma, const real* mean,
                        const real* rstd, const real* dy, real* dx, real* dgamma,
                        real* dbeta, int m, int n);

// group norm over x[C,H,W] with G groups; gamma/beta per channel
void groupnorm(const real* x, const real* gamma, const real* beta, real* y,
               real* mean, real* rstd, int c, int hw, int groups, real eps);
void groupnorm_backward(const real* x, const real* gamma, const real* mean,
                        const real* rstd, const real* dy, real* dx, real* dgamma,
                        real* dbeta, int c, int hw, int groups);

// image-to-column for conv: x[C,H,W] -> col[C*kh*kw, OH*OW]
void im2col(const real* x, real* col, int c, int h, int w, int kh, int kw,
            int stride, int pad, int oh, int ow);
// scatter-add column gradients back: dcol -> dx (dx must be pre-zeroed or accumulated)
void col2im_acc(const real* dcol, real* dx, int c, int h, int w, int kh, int kw,
                int stride, int pad, int oh, int ow);

// nearest-neighbour 2x upsample: x[C,H,W] -> y[C,2H,2W]
void upsample2x(const real* x, real* y, int c, int h, int w);
void upsample2x_backward(const real* dy, real* dx, int c, int h, int w);

}  // namespace voken::kernels
