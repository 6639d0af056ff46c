#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cdcl/image.hpp"

namespace cdcl {

// Dense CHW float tensor for one sample.
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_, float fill = 0.f)
        : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, fill) {}

    size_t size() const { return v.size(); }
    size_t plane() const { return static_cast<size_t>(h) * w; }
    float* ch(int i) { return v.data() + i * plane(); }
    const float* ch(int i) const { return v.data() + i * plane(); }
    float& at(int ci, int y, int x) { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }
    float at(int ci, int y, int x) const { return v[(static_cast<size_t>(ci) * h + y) * w + x]; }
    bool empty() const { return v.empty(); }
    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
};

// Pixel-center aligned bilinear resize (src pixel sampled at (i+0.5)*scale-0.5).
// Resizing to the same size reproduces the input exactly.
Tensor resize_bilinear(const Tensor& src, int oh, int ow);

// Scatter-add adjoint of resize_bilinear; accumulates into dsrc.
void resize_bilinear_backward(const Tensor& dout, int ih, int iw, Tensor& dsrc);

// Nearest-neighbor label resample, same alignment convention.
LabelMap resize_nearest(const LabelMap& src, int oh, int ow);

// Image <-> tensor. to_tensor maps [0,255] bytes to [0,1] floats.
Tensor to_tensor(const ImageU8& img);
ImageU8 to_image(const Tensor& t);

}  // namespace cdcl
