#pragma once

#include "voken/core/types.hpp"

// Plain serial implementations, written naively and independently of the
// OpenMP kernels. Used by tests to cross-check the parallel path and by the
// benchmark tool as the timing baseline.

namespace voken::kernels::ref {

void matmul_nn(const real* a, const real* b, real* c, int m, int k, int n);
void matmul_nt(const real* a, const real* b, real* c, int m, int k, int n);
void matmul_tn(const real* a, const real* b, real* c, int m, int k, int n);

void softmax_rows(real* x, int m, int n);

void layernorm(const real* x, const real* gamma, const real* beta, real* y,
               int m, int n, real eps);

void groupnorm(const real* x, const real* gamma, const real* beta, real* y,
               int c, int hw, int groups, real eps);

// direct convolution, no im2col: x[Cin,H,W], wgt[Cout,Cin,kh,kw], b[Cout]
void conv2d(const real* x, const real* wgt, const real* b, real* y, int cin,
            int h, int w, int cout, int kh, int kw, int stride, int pad);

void upsample2x(const real* x, real* y, int c, int h, int w);

void gelu(const real* x, real* y, int64_t n);
void silu(const real* x, real* y, int64_t n);

}  // namespace voken::kernels::ref
