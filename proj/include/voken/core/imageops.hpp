#pragma once

#include "voken/core/graph.hpp"
#include "voken/synth/scene.hpp"

namespace voken {

// [0,1] image -> [C,H,W] graph constant mapped to [lo,hi]
Ptr image_constant(Graph& g, const synth::Image& img, real lo = -1, real hi = 1);

// inverse mapping with clamping; tensor must be [3,H,W]
synth::Image tensor_to_image(const Tensor& t, real lo = -1, real hi = 1);

}  // namespace voken
