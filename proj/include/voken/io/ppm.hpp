#pragma once

#include <string>

#include "voken/synth/scene.hpp"

namespace voken::io {

// Binary PPM (P6), 8-bit RGB. Lossless for images whose values lie on the
// k/255 grid, which render() guarantees.
void write_ppm(const std::string& path, const synth::Image& img);
synth::Image read_ppm(const std::string& path);

}  // namespace voken::io
