#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "voken/core/types.hpp"

namespace voken::synth {

constexpr int kGrid = 4;       // 4x4 cell grid
constexpr int kCellPx = 8;     // 8x8 pixels per cell
constexpr int kImagePx = kGrid * kCellPx;
constexpr int kChannels = 3;
constexpr float kGray = 128.0f / 255.0f;  // background; exactly representable in 8-bit

enum class ObjShape : int { circle = 0, square = 1, triangle = 2 };
enum class ObjColor : int { red = 0, green = 1, blue = 2, yellow = 3 };
constexpr int kNumShapes = 3;
constexpr int kNumColors = 4;

const char* shape_name(ObjShape s);
const char* color_name(ObjColor c);
std::array<float, 3> color_rgb(ObjColor c);

struct SceneObject {
    ObjShape shape;
    ObjColor color;
    int row = 0;
    int col = 0;

    bool operator==(const SceneObject&) const = default;
};

// Symbolic ground truth for one image. Objects are kept row-major sorted.
struct SceneState {
    std::vector<SceneObject> objects;

    void normalize();  // sort row-major
    bool operator==(const SceneState&) const = default;
};

struct Image {
    int h = kImagePx;
    int w = kImagePx;
    int c = kChannels;
    std::vector<float> pix;  // [c][h][w], values in [0,1]

    float at(int ch, int y, int x) const { return pix[(size_t(ch) * h + y) * w + x]; }
    float& at(int ch, int y, int x) { return pix[(size_t(ch) * h + y) * w + x]; }
};

// deterministic scene generator; max_objects must be in [1,3]
SceneState gen_scene(uint64_t seed, int max_objects);

// exact rasterizer: every object inside its 8x8 cell, fixed gray background
Image render(const SceneState& scene);

// "a <color> <shape> at row R col C[ and ...]", row-major object order
std::string caption(const SceneState& scene);

// grammar inverse of caption(); throws on non-grammar strings
SceneState parse_caption(const std::string& text);

// oracle inverse of render(); nearest-attribute decoding per cell for
// arbitrary (model-generated) images
SceneState parse_image(const Image& img);

// 8x8 occupancy mask for a shape, used by the renderer and the parser
const std::array<std::array<bool, 8>, 8>& shape_mask(ObjShape s);

}  // namespace voken::synth
