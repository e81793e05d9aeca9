#pragma once

#include <memory>
#include <vector>

#include "voken/core/rng.hpp"
#include "voken/core/types.hpp"

namespace voken {

// Flat row-major tensor. Gradient storage is allocated only while the tensor
// participates in a recorded graph with requires_grad set.
struct Tensor {
    Shape shape;
    std::vector<real> v;
    std::vector<real> g;
    bool requires_grad = false;

    Tensor() = default;
    Tensor(Shape s, bool rg) : shape(std::move(s)), requires_grad(rg) {
        v.assign(size_t(numel(shape)), real(0));
        if (requires_grad) g.assign(v.size(), real(0));
    }

    int64_t size() const { return int64_t(v.size()); }
    int dim(size_t i) const { return shape[i]; }
    int rows() const { return shape[0]; }
    int cols() const { return shape.size() > 1 ? shape[1] : 1; }

    void set_requires_grad(bool rg) {
        requires_grad = rg;
        if (rg)
            g.assign(v.size(), real(0));
        else
            g.clear();
    }
    void zero_grad() {
        if (requires_grad) std::fill(g.begin(), g.end(), real(0));
    }
    void fill_normal(Rng& rng, real stddev) {
        for (auto& x : v) x = rng.normal(real(0), stddev);
    }
    void fill(real c) { std::fill(v.begin(), v.end(), c); }
};

using Ptr = std::shared_ptr<Tensor>;

inline Ptr make_tensor(Shape s, bool requires_grad = false) {
    return std::make_shared<Tensor>(std::move(s), requires_grad);
}

}  // namespace voken
