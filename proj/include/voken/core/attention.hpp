#pragma once

#include "voken/core/graph.hpp"

namespace voken {

// Standard multi-head attention from x_q [Tq,dq] over x_kv [Tk,dk].
// wq: [dq,da], wk/wv: [dk,da], wo: [da,dout]; mask (optional) added to the
// pre-softmax scores [Tq,Tk].
Ptr multihead_attention(Graph& g, const Ptr& x_q, const Ptr& x_kv, int n_heads, const Ptr& wq,
                        const Ptr& wk, const Ptr& wv, const Ptr& wo, const Ptr& mask = nullptr);

}  // namespace voken
