#include "voken/io/ppm.hpp"

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace voken::io {

void write_ppm(const std::string& path, const synth::Image& img) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), std::fclose);
    if (!f) fail("write_ppm: cannot open " + path);
    std::fprintf(f.get(), "P6\n%d %d\n255\n", img.w, img.h);
    std::vector<unsigned char> row(size_t(img.w) * 3);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                float v = img.at(ch, y, x);
                v = v < 0 ? 0 : (v > 1 ? 1 : v);
                row[size_t(x) * 3 + ch] = (unsigned char)std::lround(v * 255.0f);
            }
        if (std::fwrite(row.data(), 1, row.size(), f.get()) != row.size())
            fail("write_ppm: short write to " + path);
    }
}

synth::Image read_ppm(const std::string& path) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "rb"), std::fclose);
    if (!f) fail("read_ppm: cannot open " + path);
    char magic[3] = {};
    int w = 0, h = 0, maxval = 0;
    if (std::fscanf(f.get(), "%2s %d %d %d", magic, &w, &h, &maxval) != 4 ||
        std::string(magic) != "P6" || maxval != 255)
        fail("read_ppm: not an 8-bit P6 file: " + path);
    std::fgetc(f.get());  // single whitespace after header
    synth::Image img;
    img.w = w;
    img.h = h;
    img.c = 3;
    img.pix.assign(size_t(3) * h * w, 0.0f);
    std::vector<unsigned char> row(size_t(w) * 3);
    for (int y = 0; y < h; ++y) {
        if (std::fread(row.data(), 1, row.size(), f.get()) != row.size())
            fail("read_ppm: truncated file: " + path);
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch)
                img.at(ch, y, x) = float(row[size_t(x) * 3 + ch]) / 255.0f;
    }
    return img;
}

}  // namespace voken::io
