#pragma once

#include <unordered_map>
#include <vector>

#include "voken/core/params.hpp"

namespace voken::train {

struct AdamWConfig {
    real lr = real(1e-3);
    real beta1 = real(0.9);
    real beta2 = real(0.999);
    real eps = real(1e-8);
    real weight_decay = real(0.01);
};

// Decoupled-weight-decay Adam. State is keyed per tensor; frozen groups are
// simply never passed in, so their bytes cannot move.
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    // throws on non-finite gradients, naming the offending parameter
    void step(const std::vector<ParamEntry>& params);

    void set_lr(real lr) { cfg_.lr = lr; }
    real lr() const { return cfg_.lr; }
    int64_t steps_taken() const { return t_; }

private:
    struct State {
        std::vector<real> m, v;
    };
    AdamWConfig cfg_;
    std::unordered_map<Tensor*, State> state_;
    int64_t t_ = 0;
};

}  // namespace voken::train
