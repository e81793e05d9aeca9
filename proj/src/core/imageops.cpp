#include "voken/core/imageops.hpp"

#include <algorithm>

namespace voken {

Ptr image_constant(Graph& g, const synth::Image& img, real lo, real hi) {
    std::vector<real> data(img.pix.size());
    const real span = hi - lo;
    for (size_t i = 0; i < img.pix.size(); ++i) data[i] = lo + span * real(img.pix[i]);
    return g.constant({img.c, img.h, img.w}, std::move(data));
}

synth::Image tensor_to_image(const Tensor& t, real lo, real hi) {
    require(t.shape.size() == 3 && t.shape[0] == 3, "tensor_to_image: want [3,H,W]");
    synth::Image img;
    img.c = 3;
    img.h = t.shape[1];
    img.w = t.shape[2];
    img.pix.resize(t.v.size());
    const real span = hi - lo;
    for (size_t i = 0; i < t.v.size(); ++i) {
        const real u = (t.v[i] - lo) / span;
        img.pix[i] = float(std::clamp(u, real(0), real(1)));
    }
    return img;
}

}  // namespace voken
