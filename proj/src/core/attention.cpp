#include "voken/core/attention.hpp"

#include <cmath>

namespace voken {

Ptr multihead_attention(Graph& g, const Ptr& x_q, const Ptr& x_kv, int n_heads, const Ptr& wq,
                        const Ptr& wk, const Ptr& wv, const Ptr& wo, const Ptr& mask) {
    const int da = wq->shape[1];
    require(da % n_heads == 0, "attention: width not divisible by heads");
    const int dh = da / n_heads;
    Ptr q = g.matmul(x_q, wq);
    Ptr k = g.matmul(x_kv, wk);
    Ptr v = g.matmul(x_kv, wv);
    const real s = real(1) / std::sqrt(real(dh));
    std::vector<Ptr> heads;
    for (int h = 0; h < n_heads; ++h) {
        Ptr qh = g.slice_cols(q, h * dh, dh);
        Ptr kh = g.slice_cols(k, h * dh, dh);
        Ptr vh = g.slice_cols(v, h * dh, dh);
        Ptr scores = g.scale(g.matmul_nt(qh, kh), s);
        if (mask) scores = g.add(scores, mask);
        heads.push_back(g.matmul(g.softmax_rows(scores), vh));
    }
    return g.matmul(n_heads == 1 ? heads[0] : g.hconcat(heads), wo);
}

}  // namespace voken
