#include "voken/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "voken/core/rng.hpp"

namespace voken::synth {

const char* shape_name(ObjShape s) {
    switch (s) {
        case ObjShape::circle: return "circle";
        case ObjShape::square: return "square";
        case ObjShape::triangle: return "triangle";
    }
    fail("bad shape");
}

const char* color_name(ObjColor c) {
    switch (c) {
        case ObjColor::red: return "red";
        case ObjColor::green: return "green";
        case ObjColor::blue: return "blue";
        case ObjColor::yellow: return "yellow";
    }
    fail("bad color");
}

std::array<float, 3> color_rgb(ObjColor c) {
    switch (c) {
        case ObjColor::red: return {1, 0, 0};
        case ObjColor::green: return {0, 1, 0};
        case ObjColor::blue: return {0, 0, 1};
        case ObjColor::yellow: return {1, 1, 0};
    }
    fail("bad color");
}

void SceneState::normalize() {
    std::sort(objects.begin(), objects.end(), [](const SceneObject& a, const SceneObject& b) {
        if (a.row != b.row) return a.row < b.row;
        return a.col < b.col;
    });
}

const std::array<std::array<bool, 8>, 8>& shape_mask(ObjShape s) {
    static const auto circle = [] {
        std::array<std::array<bool, 8>, 8> m{};
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                const float dy = float(y) - 3.5f, dx = float(x) - 3.5f;
                m[y][x] = dy * dy + dx * dx <= 3.2f * 3.2f;
            }
        return m;
    }();
    static const auto square = [] {
        std::array<std::array<bool, 8>, 8> m{};
        for (int y = 1; y <= 6; ++y)
            for (int x = 1; x <= 6; ++x) m[y][x] = true;
        return m;
    }();
    static const auto triangle = [] {
        std::array<std::array<bool, 8>, 8> m{};
        const int lo[6] = {3, 2, 2, 1, 1, 0};
        const int hi[6] = {4, 5, 5, 6, 6, 7};
        for (int y = 1; y <= 6; ++y)
            for (int x = lo[y - 1]; x <= hi[y - 1]; ++x) m[y][x] = true;
        return m;
    }();
    switch (s) {
        case ObjShape::circle: return circle;
        case ObjShape::square: return square;
        case ObjShape::triangle: return triangle;
    }
    fail("bad shape");
}

SceneState gen_scene(uint64_t seed, int max_objects) {
    require(max_objects >= 1 && max_objects <= 3, "gen_scene: max_objects must be in [1,3]");
    Rng rng(seed ^ 0x5ce9e5u);
    const int count = int(rng.uniform_int(1, max_objects));
    std::array<int, kGrid * kGrid> cells{};
    for (int i = 0; i < kGrid * kGrid; ++i) cells[i] = i;
    SceneState scene;
    for (int i = 0; i < count; ++i) {
        // draw a not-yet-used cell
        const int j = i + int(rng.uniform_int(kGrid * kGrid - i));
        std::swap(cells[i], cells[j]);
        SceneObject obj;
        obj.shape = ObjShape(rng.uniform_int(kNumShapes));
        obj.color = ObjColor(rng.uniform_int(kNumColors));
        obj.row = cells[i] / kGrid;
        obj.col = cells[i] % kGrid;
        scene.objects.push_back(obj);
    }
    scene.normalize();
    return scene;
}

Image render(const SceneState& scene) {
    Image img;
    img.pix.assign(size_t(img.c) * img.h * img.w, kGray);
    for (const auto& obj : scene.objects) {
        require(obj.row >= 0 && obj.row < kGrid && obj.col >= 0 && obj.col < kGrid,
                "render: object cell out of grid");
        const auto& mask = shape_mask(obj.shape);
        const auto rgb = color_rgb(obj.color);
        for (int y = 0; y < kCellPx; ++y)
            for (int x = 0; x < kCellPx; ++x) {
                if (!mask[y][x]) continue;
                const int py = obj.row * kCellPx + y;
                const int px = obj.col * kCellPx + x;
                for (int ch = 0; ch < kChannels; ++ch) img.at(ch, py, px) = rgb[ch];
            }
    }
    return img;
}

std::string caption(const SceneState& scene) {
    std::ostringstream out;
    for (size_t i = 0; i < scene.objects.size(); ++i) {
        const auto& o = scene.objects[i];
        if (i) out << " and ";
        out << "a " << color_name(o.color) << " " << shape_name(o.shape) << " at row " << o.row
            << " col " << o.col;
    }
    return out.str();
}

namespace {

ObjColor color_from_name(const std::string& s) {
    for (int i = 0; i < kNumColors; ++i)
        if (s == color_name(ObjColor(i))) return ObjColor(i);
    fail("unknown color word: " + s);
}

ObjShape shape_from_name(const std::string& s) {
    for (int i = 0; i < kNumShapes; ++i)
        if (s == shape_name(ObjShape(i))) return ObjShape(i);
    fail("unknown shape word: " + s);
}

}  // namespace

SceneState parse_caption(const std::string& text) {
    SceneState scene;
    std::istringstream in(text);
    std::vector<std::string> words;
    for (std::string w; in >> w;) words.push_back(w);
    size_t i = 0;
    while (i < words.size()) {
        // "a <color> <shape> at row R col C"
        require(i + 8 <= words.size() && words[i] == "a" && words[i + 3] == "at" &&
                    words[i + 4] == "row" && words[i + 6] == "col",
                "parse_caption: not a caption: " + text);
        SceneObject obj;
        obj.color = color_from_name(words[i + 1]);
        obj.shape = shape_from_name(words[i + 2]);
        obj.row = std::stoi(words[i + 5]);
        obj.col = std::stoi(words[i + 7]);
        scene.objects.push_back(obj);
        i += 8;
        if (i < words.size()) {
            require(words[i] == "and", "parse_caption: expected 'and' in: " + text);
            ++i;
        }
    }
    scene.normalize();
    return scene;
}

SceneState parse_image(const Image& img) {
    require(img.h == kImagePx && img.w == kImagePx && img.c == kChannels,
            "parse_image: expected " + std::to_string(kImagePx) + "x" +
                std::to_string(kImagePx) + "x" + std::to_string(kChannels) + " image");
    SceneState scene;
    for (int r = 0; r < kGrid; ++r) {
        for (int cc = 0; cc < kGrid; ++cc) {
            // foreground = pixels that moved away from the background gray
            std::array<std::array<bool, 8>, 8> fg{};
            int count = 0;
            float sum[3] = {0, 0, 0};
            for (int y = 0; y < kCellPx; ++y)
                for (int x = 0; x < kCellPx; ++x) {
                    const int py = r * kCellPx + y, px = cc * kCellPx + x;
                    float dev = 0;
                    for (int ch = 0; ch < kChannels; ++ch)
                        dev = std::max(dev, std::fabs(img.at(ch, py, px) - kGray));
                    if (dev > 0.15f) {
                        fg[y][x] = true;
                        ++count;
                        for (int ch = 0; ch < kChannels; ++ch) sum[ch] += img.at(ch, py, px);
                    }
                }
            if (count < 8) continue;  // cell not occupied

            SceneObject obj;
            obj.row = r;
            obj.col = cc;

            float best_color = 1e30f;
            for (int ci = 0; ci < kNumColors; ++ci) {
                const auto rgb = color_rgb(ObjColor(ci));
                float d = 0;
                for (int ch = 0; ch < kChannels; ++ch) {
                    const float e = sum[ch] / float(count) - rgb[ch];
                    d += e * e;
                }
                if (d < best_color) {
                    best_color = d;
                    obj.color = ObjColor(ci);
                }
            }
            int best_shape = 1 << 20;
            for (int si = 0; si < kNumShapes; ++si) {
                const auto& mask = shape_mask(ObjShape(si));
                int hamming = 0;
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) hamming += int(fg[y][x] != mask[y][x]);
                if (hamming < best_shape) {
                    best_shape = hamming;
                    obj.shape = ObjShape(si);
                }
            }
            scene.objects.push_back(obj);
        }
    }
    scene.normalize();
    return scene;
}

}  // namespace voken::synth
