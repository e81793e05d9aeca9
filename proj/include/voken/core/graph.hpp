#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "voken/core/tensor.hpp"

namespace voken {

// Dynamic reverse-mode tape. Ops execute eagerly; when recording and any
// input requires grad, a backward closure is pushed. backward(loss) replays
// the tape in reverse, accumulating into Tensor::g.
//
// A graph constructed with recording=false performs no bookkeeping and is
// the inference path (sampling, generation, metrics).
class Graph {
public:
    explicit Graph(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }

    Ptr constant(Shape shape, std::vector<real> data);
    Ptr zeros(Shape shape);
    Ptr scalar(real value);

    Ptr add(Ptr a, Ptr b);
    Ptr sub(Ptr a, Ptr b);
    Ptr mul(Ptr a, Ptr b);
    Ptr scale(Ptr a, real s);

    Ptr matmul(Ptr a, Ptr b);     // [M,K]x[K,N]
    Ptr matmul_nt(Ptr a, Ptr b);  // [M,K]x[N,K]^T -> [M,N]
    Ptr transpose(Ptr a);

    Ptr add_bias(Ptr x, Ptr b);          // x[M,N] + b[N] per row
    Ptr add_channelwise(Ptr x, Ptr b);   // x[C,HW] + b[C] per channel
    Ptr linear(Ptr x, Ptr w, Ptr b);     // matmul + bias (b may be null)

    Ptr gather_rows(Ptr table, std::vector<int> idx);
    Ptr vconcat(std::vector<Ptr> parts);          // stack along rows
    Ptr slice_rows(Ptr x, int start, int len);
    Ptr slice_cols(Ptr x, int start, int len);
    Ptr hconcat(std::vector<Ptr> parts);          // stack along cols

    Ptr softmax_rows(Ptr x);
    Ptr gelu(Ptr x);
    Ptr silu(Ptr x);
    Ptr layernorm(Ptr x, Ptr gamma, Ptr beta, real eps = real(1e-5));
    Ptr groupnorm(Ptr x, int groups, Ptr gamma, Ptr beta, real eps = real(1e-5));

    // x [Cin,H,W], w [Cout,Cin,kh,kw], b [Cout] or null
    Ptr conv2d(Ptr x, Ptr w, Ptr b, int stride, int pad);
    Ptr concat_channels(Ptr a, Ptr b);  // [Ca,H,W] + [Cb,H,W]
    Ptr upsample2x(Ptr x);
    Ptr chw_to_rows(Ptr x);                   // [C,H,W] -> [H*W,C]
    Ptr rows_to_chw(Ptr x, int c, int h, int w);
    Ptr reshape(Ptr x, Shape shape);

    // sum over masked positions of -log softmax(logits)[target]
    Ptr cross_entropy_sum(Ptr logits, const std::vector<int>& targets,
                          const std::vector<uint8_t>& mask);
    Ptr mse(Ptr a, Ptr b);  // per-element mean
    Ptr sum(Ptr x);

    void backward(const Ptr& loss);

    size_t tape_size() const { return tape_.size(); }

private:
    Ptr out_like(Shape shape, const std::vector<const Ptr*>& inputs);
    bool track(const Ptr& t) const { return recording_ && t && t->requires_grad; }
    void push(std::function<void()> fn) { tape_.push_back(std::move(fn)); }

    std::vector<std::function<void()>> tape_;
    bool recording_;
};

}  // namespace voken
