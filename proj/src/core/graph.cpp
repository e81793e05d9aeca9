#include "voken/core/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "voken/kernels/kernels.hpp"

namespace voken {

namespace ker = voken::kernels;

Ptr Graph::out_like(Shape shape, const std::vector<const Ptr*>& inputs) {
    bool rg = false;
    if (recording_) {
        for (const Ptr* p : inputs)
            if (*p && (*p)->requires_grad) rg = true;
    }
    return make_tensor(std::move(shape), rg);
}

Ptr Graph::constant(Shape shape, std::vector<real> data) {
    Ptr t = make_tensor(std::move(shape), false);
    require(int64_t(data.size()) == t->size(), "constant: data size mismatch");
    t->v = std::move(data);
    return t;
}

Ptr Graph::zeros(Shape shape) { return make_tensor(std::move(shape), false); }

Ptr Graph::scalar(real value) {
    Ptr t = make_tensor({1}, false);
    t->v[0] = value;
    return t;
}

Ptr Graph::add(Ptr a, Ptr b) {
    require(a->v.size() == b->v.size(), "add: size mismatch " + shape_str(a->shape) +
                                            " vs " + shape_str(b->shape));
    Ptr out = out_like(a->shape, {&a, &b});
    const int64_t n = a->size();
    for (int64_t i = 0; i < n; ++i) out->v[i] = a->v[i] + b->v[i];
    if (out->requires_grad)
        push([a, b, out] {
            const int64_t n = out->size();
            if (a->requires_grad)
                for (int64_t i = 0; i < n; ++i) a->g[i] += out->g[i];
            if (b->requires_grad)
                for (int64_t i = 0; i < n; ++i) b->g[i] += out->g[i];
        });
    return out;
}

Ptr Graph::sub(Ptr a, Ptr b) {
    require(a->v.size() == b->v.size(), "sub: size mismatch");
    Ptr out = out_like(a->shape, {&a, &b});
    const int64_t n = a->size();
    for (int64_t i = 0; i < n; ++i) out->v[i] = a->v[i] - b->v[i];
    if (out->requires_grad)
        push([a, b, out] {
            const int64_t n = out->size();
            if (a->requires_grad)
                for (int64_t i = 0; i < n; ++i) a->g[i] += out->g[i];
            if (b->requires_grad)
                for (int64_t i = 0; i < n; ++i) b->g[i] -= out->g[i];
        });
    return out;
}

Ptr Graph::mul(Ptr a, Ptr b) {
    require(a->v.size() == b->v.size(), "mul: size mismatch");
    Ptr out = out_like(a->shape, {&a, &b});
    const int64_t n = a->size();
    for (int64_t i = 0; i < n; ++i) out->v[i] = a->v[i] * b->v[i];
    if (out->requires_grad)
        push([a, b, out] {
            const int64_t n = out->size();
            if (a->requires_grad)
                for (int64_t i = 0; i < n; ++i) a->g[i] += out->g[i] * b->v[i];
            if (b->requires_grad)
                for (int64_t i = 0; i < n; ++i) b->g[i] += out->g[i] * a->v[i];
        });
    return out;
}

Ptr Graph::scale(Ptr a, real s) {
    Ptr out = out_like(a->shape, {&a});
    const int64_t n = a->size();
    for (int64_t i = 0; i < n; ++i) out->v[i] = a->v[i] * s;
    if (out->requires_grad)
        push([a, out, s] {
            const int64_t n = out->size();
            for (int64_t i = 0; i < n; ++i) a->g[i] += out->g[i] * s;
        });
    return out;
}

Ptr Graph::matmul(Ptr a, Ptr b) {
    require(a->shape.size() == 2 && b->shape.size() == 2 && a->shape[1] == b->shape[0],
            "matmul: bad shapes " + shape_str(a->shape) + " x " + shape_str(b->shape));
    const int m = a->shape[0], k = a->shape[1], n = b->shape[1];
    Ptr out = out_like({m, n}, {&a, &b});
    ker::matmul_nn(a->v.data(), b->v.data(), out->v.data(), m, k, n);
    if (out->requires_grad)
        push([a, b, out, m, k, n] {
            if (a->requires_grad)
                ker::matmul_nt(out->g.data(), b->v.data(), a->g.data(), m, n, k, true);
            if (b->requires_grad)
                ker::matmul_tn(a->v.data(), out->g.data(), b->g.data(), k, m, n, true);
        });
    return out;
}

Ptr Graph::matmul_nt(Ptr a, Ptr b) {
    require(a->shape.size() == 2 && b->shape.size() == 2 && a->shape[1] == b->shape[1],
            "matmul_nt: bad shapes");
    const int m = a->shape[0], k = a->shape[1], n = b->shape[0];
    Ptr out = out_like({m, n}, {&a, &b});
    ker::matmul_nt(a->v.data(), b->v.data(), out->v.data(), m, k, n);
    if (out->requires_grad)
        push([a, b, out, m, k, n] {
            if (a->requires_grad)
                ker::matmul_nn(out->g.data(), b->v.data(), a->g.data(), m, n, k, true);
            if (b->requires_grad)
                ker::matmul_tn(out->g.data(), a->v.data(), b->g.data(), n, m, k, true);
        });
    return out;
}

Ptr Graph::transpose(Ptr a) {
    require(a->shape.size() == 2, "transpose: want 2-d");
    const int m = a->shape[0], n = a->shape[1];
    Ptr out = out_like({n, m}, {&a});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out->v[size_t(j) * m + i] = a->v[size_t(i) * n + j];
    if (out->requires_grad)
        push([a, out, m, n] {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) a->g[size_t(i) * n + j] += out->g[size_t(j) * m + i];
        });
    return out;
}

Ptr Graph::add_bias(Ptr x, Ptr b) {
    require(x->shape.size() == 2 && b->size() == x->shape[1], "add_bias: shape mismatch");
    const int m = x->shape[0], n = x->shape[1];
    Ptr out = out_like(x->shape, {&x, &b});
    out->v = x->v;
    ker::add_bias_rows(out->v.data(), b->v.data(), m, n);
    if (out->requires_grad)
        push([x, b, out, m, n] {
            if (x->requires_grad) {
                const int64_t total = out->size();
                for (int64_t i = 0; i < total; ++i) x->g[i] += out->g[i];
            }
            if (b->requires_grad) ker::bias_grad_rows(out->g.data(), b->g.data(), m, n);
        });
    return out;
}

Ptr Graph::add_channelwise(Ptr x, Ptr b) {
    const int c = x->shape[0];
    const int hw = int(x->size() / c);
    require(b->size() == c, "add_channelwise: bias size mismatch");
    Ptr out = out_like(x->shape, {&x, &b});
    for (int ch = 0; ch < c; ++ch) {
        const real bv = b->v[ch];
        for (int i = 0; i < hw; ++i) out->v[size_t(ch) * hw + i] = x->v[size_t(ch) * hw + i] + bv;
    }
    if (out->requires_grad)
        push([x, b, out, c, hw] {
            if (x->requires_grad) {
                const int64_t total = out->size();
                for (int64_t i = 0; i < total; ++i) x->g[i] += out->g[i];
            }
            if (b->requires_grad)
                for (int ch = 0; ch < c; ++ch) {
                    real s = 0;
                    for (int i = 0; i < hw; ++i) s += out->g[size_t(ch) * hw + i];
                    b->g[ch] += s;
                }
        });
    return out;
}

Ptr Graph::linear(Ptr x, Ptr w, Ptr b) {
    Ptr y = matmul(std::move(x), std::move(w));
    if (b) y = add_bias(std::move(y), std::move(b));
    return y;
}

Ptr Graph::gather_rows(Ptr table, std::vector<int> idx) {
    require(table->shape.size() == 2, "gather_rows: want 2-d table");
    const int n = table->shape[1];
    Ptr out = out_like({int(idx.size()), n}, {&table});
    for (size_t i = 0; i < idx.size(); ++i) {
        require(idx[i] >= 0 && idx[i] < table->shape[0], "gather_rows: index out of range");
        std::memcpy(&out->v[i * n], &table->v[size_t(idx[i]) * n], sizeof(real) * n);
    }
    if (out->requires_grad)
        push([table, out, idx = std::move(idx), n] {
            for (size_t i = 0; i < idx.size(); ++i) {
                const real* src = &out->g[i * n];
                real* dst = &table->g[size_t(idx[i]) * n];
                for (int j = 0; j < n; ++j) dst[j] += src[j];
            }
        });
    return out;
}

Ptr Graph::vconcat(std::vector<Ptr> parts) {
    require(!parts.empty(), "vconcat: empty");
    const int n = parts[0]->cols();
    int rows = 0;
    std::vector<const Ptr*> in;
    for (auto& p : parts) {
        require(p->cols() == n, "vconcat: column mismatch");
        rows += p->rows();
        in.push_back(&p);
    }
    Ptr out = out_like({rows, n}, in);
    int64_t off = 0;
    for (auto& p : parts) {
        std::memcpy(&out->v[off], p->v.data(), sizeof(real) * p->v.size());
        off += p->size();
    }
    if (out->requires_grad)
        push([parts = std::move(parts), out] {
            int64_t off = 0;
            for (auto& p : parts) {
                if (p->requires_grad)
                    for (int64_t i = 0; i < p->size(); ++i) p->g[i] += out->g[off + i];
                off += p->size();
            }
        });
    return out;
}

Ptr Graph::slice_rows(Ptr x, int start, int len) {
    require(x->shape.size() == 2 && start >= 0 && start + len <= x->shape[0],
            "slice_rows: out of range");
    const int n = x->shape[1];
    Ptr out = out_like({len, n}, {&x});
    std::memcpy(out->v.data(), &x->v[size_t(start) * n], sizeof(real) * size_t(len) * n);
    if (out->requires_grad)
        push([x, out, start, len, n] {
            for (int64_t i = 0; i < int64_t(len) * n; ++i) x->g[size_t(start) * n + i] += out->g[i];
        });
    return out;
}

Ptr Graph::slice_cols(Ptr x, int start, int len) {
    require(x->shape.size() == 2 && start >= 0 && start + len <= x->shape[1],
            "slice_cols: out of range");
    const int m = x->shape[0], n = x->shape[1];
    Ptr out = out_like({m, len}, {&x});
    for (int i = 0; i < m; ++i)
        std::memcpy(&out->v[size_t(i) * len], &x->v[size_t(i) * n + start], sizeof(real) * len);
    if (out->requires_grad)
        push([x, out, start, len, m, n] {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < len; ++j)
                    x->g[size_t(i) * n + start + j] += out->g[size_t(i) * len + j];
        });
    return out;
}

Ptr Graph::hconcat(std::vector<Ptr> parts) {
    require(!parts.empty(), "hconcat: empty");
    const int m = parts[0]->rows();
    int cols = 0;
    std::vector<const Ptr*> in;
    for (auto& p : parts) {
        require(p->rows() == m, "hconcat: row mismatch");
        cols += p->cols();
        in.push_back(&p);
    }
    Ptr out = out_like({m, cols}, in);
    int off = 0;
    for (auto& p : parts) {
        const int pc = p->cols();
        for (int i = 0; i < m; ++i)
            std::memcpy(&out->v[size_t(i) * cols + off], &p->v[size_t(i) * pc], sizeof(real) * pc);
        off += pc;
    }
    if (out->requires_grad)
        push([parts = std::move(parts), out, m, cols] {
            int off = 0;
            for (auto& p : parts) {
                const int pc = p->cols();
                if (p->requires_grad)
                    for (int i = 0; i < m; ++i)
                        for (int j = 0; j < pc; ++j)
                            p->g[size_t(i) * pc + j] += out->g[size_t(i) * cols + off + j];
                off += pc;
            }
        });
    return out;
}

Ptr Graph::softmax_rows(Ptr x) {
    require(x->shape.size() == 2, "softmax_rows: want 2-d");
    const int m = x->shape[0], n = x->shape[1];
    Ptr out = out_like(x->shape, {&x});
    out->v = x->v;
    ker::softmax_rows(out->v.data(), m, n);
    if (out->requires_grad)
        push([x, out, m, n] {
            std::vector<real> dx(size_t(m) * n);
            ker::softmax_rows_backward(out->v.data(), out->g.data(), dx.data(), m, n);
            for (int64_t i = 0; i < int64_t(m) * n; ++i) x->g[i] += dx[i];
        });
    return out;
}

Ptr Graph::gelu(Ptr x) {
    Ptr out = out_like(x->shape, {&x});
    ker::gelu(x->v.data(), out->v.data(), x->size());
    if (out->requires_grad)
        push([x, out] { ker::gelu_backward(x->v.data(), out->g.data(), x->g.data(), x->size()); });
    return out;
}

Ptr Graph::silu(Ptr x) {
    Ptr out = out_like(x->shape, {&x});
    ker::silu(x->v.data(), out->v.data(), x->size());
    if (out->requires_grad)
        push([x, out] { ker::silu_backward(x->v.data(), out->g.data(), x->g.data(), x->size()); });
    return out;
}

Ptr Graph::layernorm(Ptr x, Ptr gamma, Ptr beta, real eps) {
    require(x->shape.size() == 2 && gamma->size() == x->shape[1] && beta->size() == x->shape[1],
            "layernorm: shape mismatch");
    const int m = x->shape[0], n = x->shape[1];
    Ptr out = out_like(x->shape, {&x, &gamma, &beta});
    auto mean = std::make_shared<std::vector<real>>(m);
    auto rstd = std::make_shared<std::vector<real>>(m);
    ker::layernorm(x->v.data(), gamma->v.data(), beta->v.data(), out->v.data(), mean->data(),
                   rstd->data(), m, n, eps);
    if (out->requires_grad)
        push([x, gamma, beta, out, mean, rstd, m, n] {
            ker::layernorm_backward(x->v.data(), gamma->v.data(), mean->data(), rstd->data(),
                                    out->g.data(),
                                    x->requires_grad ? x->g.data() : nullptr,
                                    gamma->requires_grad ? gamma->g.data() : nullptr,
                                    gamma->requires_grad ? beta->g.data() : nullptr, m, n);
        });
    return out;
}

Ptr Graph::groupnorm(Ptr x, int groups, Ptr gamma, Ptr beta, real eps) {
    const int c = x->shape[0];
    const int hw = int(x->size() / c);
    require(c % groups == 0 && gamma->size() == c && beta->size() == c,
            "groupnorm: shape mismatch");
    Ptr out = out_like(x->shape, {&x, &gamma, &beta});
    auto mean = std::make_shared<std::vector<real>>(groups);
    auto rstd = std::make_shared<std::vector<real>>(groups);
    ker::groupnorm(x->v.data(), gamma->v.data(), beta->v.data(), out->v.data(), mean->data(),
                   rstd->data(), c, hw, groups, eps);
    if (out->requires_grad)
        push([x, gamma, beta, out, mean, rstd, c, hw, groups] {
            ker::groupnorm_backward(x->v.data(), gamma->v.data(), mean->data(), rstd->data(),
                                    out->g.data(),
                                    x->requires_grad ? x->g.data() : nullptr,
                                    gamma->requires_grad ? gamma->g.data() : nullptr,
                                    gamma->requires_grad ? beta->g.data() : nullptr, c, hw, groups);
        });
    return out;
}

Ptr Graph::conv2d(Ptr x, Ptr w, Ptr b, int stride, int pad) {
    require(x->shape.size() == 3 && w->shape.size() == 4 && x->shape[0] == w->shape[1],
            "conv2d: shape mismatch");
    const int cin = x->shape[0], h = x->shape[1], wd = x->shape[2];
    const int cout = w->shape[0], kh = w->shape[2], kw = w->shape[3];
    const int oh = (h + 2 * pad - kh) / stride + 1;
    const int ow = (wd + 2 * pad - kw) / stride + 1;
    const int ckk = cin * kh * kw, ohw = oh * ow;

    Ptr out = out_like({cout, oh, ow}, {&x, &w, &b});
    {
        std::vector<real> col(size_t(ckk) * ohw);
        ker::im2col(x->v.data(), col.data(), cin, h, wd, kh, kw, stride, pad, oh, ow);
        ker::matmul_nn(w->v.data(), col.data(), out->v.data(), cout, ckk, ohw);
    }
    if (b) {
        require(b->size() == cout, "conv2d: bias size mismatch");
        for (int co = 0; co < cout; ++co) {
            const real bv = b->v[co];
            for (int i = 0; i < ohw; ++i) out->v[size_t(co) * ohw + i] += bv;
        }
    }
    if (out->requires_grad)
        push([x, w, b, out, cin, h, wd, cout, kh, kw, stride, pad, oh, ow, ckk, ohw] {
            // im2col is recomputed rather than kept alive across the step
            std::vector<real> col(size_t(ckk) * ohw);
            ker::im2col(x->v.data(), col.data(), cin, h, wd, kh, kw, stride, pad, oh, ow);
            if (w->requires_grad)
                ker::matmul_nt(out->g.data(), col.data(), w->g.data(), cout, ohw, ckk, true);
            if (x->requires_grad) {
                std::vector<real> dcol(size_t(ckk) * ohw);
                ker::matmul_tn(w->v.data(), out->g.data(), dcol.data(), ckk, cout, ohw);
                ker::col2im_acc(dcol.data(), x->g.data(), cin, h, wd, kh, kw, stride, pad, oh, ow);
            }
            if (b && b->requires_grad)
                for (int co = 0; co < cout; ++co) {
                    real s = 0;
                    for (int i = 0; i < ohw; ++i) s += out->g[size_t(co) * ohw + i];
                    b->g[co] += s;
                }
        });
    return out;
}

Ptr Graph::concat_channels(Ptr a, Ptr b) {
    require(a->shape.size() == 3 && b->shape.size() == 3 && a->shape[1] == b->shape[1] &&
                a->shape[2] == b->shape[2],
            "concat_channels: spatial shape mismatch");
    Ptr out = out_like({a->shape[0] + b->shape[0], a->shape[1], a->shape[2]}, {&a, &b});
    std::memcpy(out->v.data(), a->v.data(), sizeof(real) * a->v.size());
    std::memcpy(out->v.data() + a->size(), b->v.data(), sizeof(real) * b->v.size());
    if (out->requires_grad)
        push([a, b, out] {
            if (a->requires_grad)
                for (int64_t i = 0; i < a->size(); ++i) a->g[i] += out->g[i];
            if (b->requires_grad)
                for (int64_t i = 0; i < b->size(); ++i) b->g[i] += out->g[a->size() + i];
        });
    return out;
}

Ptr Graph::upsample2x(Ptr x) {
    require(x->shape.size() == 3, "upsample2x: want 3-d");
    const int c = x->shape[0], h = x->shape[1], w = x->shape[2];
    Ptr out = out_like({c, 2 * h, 2 * w}, {&x});
    ker::upsample2x(x->v.data(), out->v.data(), c, h, w);
    if (out->requires_grad)
        push([x, out, c, h, w] { ker::upsample2x_backward(out->g.data(), x->g.data(), c, h, w); });
    return out;
}

Ptr Graph::chw_to_rows(Ptr x) {
    require(x->shape.size() == 3, "chw_to_rows: want 3-d");
    const int c = x->shape[0];
    const int hw = x->shape[1] * x->shape[2];
    Ptr out = out_like({hw, c}, {&x});
    for (int ch = 0; ch < c; ++ch)
        for (int p = 0; p < hw; ++p) out->v[size_t(p) * c + ch] = x->v[size_t(ch) * hw + p];
    if (out->requires_grad)
        push([x, out, c, hw] {
            for (int ch = 0; ch < c; ++ch)
                for (int p = 0; p < hw; ++p) x->g[size_t(ch) * hw + p] += out->g[size_t(p) * c + ch];
        });
    return out;
}

Ptr Graph::rows_to_chw(Ptr x, int c, int h, int w) {
    require(x->shape.size() == 2 && x->shape[0] == h * w && x->shape[1] == c,
            "rows_to_chw: shape mismatch");
    const int hw = h * w;
    Ptr out = out_like({c, h, w}, {&x});
    for (int ch = 0; ch < c; ++ch)
        for (int p = 0; p < hw; ++p) out->v[size_t(ch) * hw + p] = x->v[size_t(p) * c + ch];
    if (out->requires_grad)
        push([x, out, c, hw] {
            for (int ch = 0; ch < c; ++ch)
                for (int p = 0; p < hw; ++p) x->g[size_t(p) * c + ch] += out->g[size_t(ch) * hw + p];
        });
    return out;
}

Ptr Graph::reshape(Ptr x, Shape shape) {
    require(numel(shape) == x->size(), "reshape: element count mismatch");
    Ptr out = out_like(std::move(shape), {&x});
    out->v = x->v;
    if (out->requires_grad)
        push([x, out] {
            for (int64_t i = 0; i < x->size(); ++i) x->g[i] += out->g[i];
        });
    return out;
}

Ptr Graph::cross_entropy_sum(Ptr logits, const std::vector<int>& targets,
                             const std::vector<uint8_t>& mask) {
    require(logits->shape.size() == 2 && int(targets.size()) == logits->shape[0] &&
                mask.size() == targets.size(),
            "cross_entropy_sum: shape mismatch");
    int supervised = 0;
    for (uint8_t m : mask) supervised += m;
    require(supervised > 0, "cross_entropy_sum: empty supervision mask");

    const int m = logits->shape[0], n = logits->shape[1];
    auto probs = std::make_shared<std::vector<real>>(logits->v);
    ker::softmax_rows(probs->data(), m, n);

    Ptr out = out_like({1}, {&logits});
    real loss = 0;
    for (int i = 0; i < m; ++i) {
        if (!mask[i]) continue;
        require(targets[i] >= 0 && targets[i] < n, "cross_entropy_sum: target out of range");
        const real p = std::max((*probs)[size_t(i) * n + targets[i]], real(1e-30));
        loss -= std::log(p);
    }
    out->v[0] = loss;
    if (out->requires_grad)
        push([logits, out, probs, targets, mask, m, n] {
            const real go = out->g[0];
            for (int i = 0; i < m; ++i) {
                if (!mask[i]) continue;
                real* dl = &logits->g[size_t(i) * n];
                const real* p = &(*probs)[size_t(i) * n];
                for (int j = 0; j < n; ++j) dl[j] += go * p[j];
                dl[targets[i]] -= go;
            }
        });
    return out;
}

Ptr Graph::mse(Ptr a, Ptr b) {
    require(a->v.size() == b->v.size(), "mse: size mismatch");
    Ptr out = out_like({1}, {&a, &b});
    const int64_t n = a->size();
    real s = 0;
    for (int64_t i = 0; i < n; ++i) {
        const real d = a->v[i] - b->v[i];
        s += d * d;
    }
    out->v[0] = s / real(n);
    if (out->requires_grad)
        push([a, b, out, n] {
            const real c = real(2) * out->g[0] / real(n);
            if (a->requires_grad)
                for (int64_t i = 0; i < n; ++i) a->g[i] += c * (a->v[i] - b->v[i]);
            if (b->requires_grad)
                for (int64_t i = 0; i < n; ++i) b->g[i] -= c * (a->v[i] - b->v[i]);
        });
    return out;
}

Ptr Graph::sum(Ptr x) {
    Ptr out = out_like({1}, {&x});
    real s = 0;
    for (int64_t i = 0; i < x->size(); ++i) s += x->v[i];
    out->v[0] = s;
    if (out->requires_grad)
        push([x, out] {
            for (int64_t i = 0; i < x->size(); ++i) x->g[i] += out->g[0];
        });
    return out;
}

void Graph::backward(const Ptr& loss) {
    require(recording_, "backward: graph is not recording");
    require(loss->size() == 1, "backward: loss must be scalar");
    require(loss->requires_grad, "backward: loss does not depend on any trainable tensor");
    loss->g[0] = real(1);
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
}

}  // namespace voken
