#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cdcl {

// Interleaved 8-bit image, RGB (c=3) or grayscale (c=1).
struct ImageU8 {
    int h = 0, w = 0, c = 0;
    std::vector<uint8_t> v;

    ImageU8() = default;
    ImageU8(int h_, int w_, int c_, uint8_t fill = 0)
        : h(h_), w(w_), c(c_), v(static_cast<size_t>(h_) * w_ * c_, fill) {}

    uint8_t& at(int y, int x, int ch) { return v[(static_cast<size_t>(y) * w + x) * c + ch]; }
    uint8_t at(int y, int x, int ch) const { return v[(static_cast<size_t>(y) * w + x) * c + ch]; }
    bool empty() const { return v.empty(); }
    bool operator==(const ImageU8&) const = default;
};

// Per-pixel class indices.
struct LabelMap {
    int h = 0, w = 0;
    std::vector<uint8_t> v;

    LabelMap() = default;
    LabelMap(int h_, int w_, uint8_t fill = 0)
        : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

    uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
    bool empty() const { return v.empty(); }
    bool operator==(const LabelMap&) const = default;
};

}  // namespace cdcl
