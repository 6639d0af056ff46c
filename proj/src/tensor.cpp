#include "cdcl/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace cdcl {

namespace {

struct Lerp {
    int i0, i1;
    float w0, w1;
};

// Per-axis interpolation table. Exact identity when oh == ih.
std::vector<Lerp> lerp_table(int in, int out) {
    std::vector<Lerp> t(out);
    double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        double s = (o + 0.5) * scale - 0.5;
        double f = std::floor(s);
        int i0 = static_cast<int>(f);
        float frac = static_cast<float>(s - f);
        int i1 = i0 + 1;
        i0 = std::clamp(i0, 0, in - 1);
        i1 = std::clamp(i1, 0, in - 1);
        t[o] = {i0, i1, 1.f - frac, frac};
    }
    return t;
}

}  // namespace

Tensor resize_bilinear(const Tensor& src, int oh, int ow) {
    if (src.empty() || oh <= 0 || ow <= 0)
        throw std::invalid_argument("resize_bilinear: bad shapes");
    if (oh == src.h && ow == src.w) return src;
    Tensor out(src.c, oh, ow);
    auto ty = lerp_table(src.h, oh);
    auto tx = lerp_table(src.w, ow);
    for (int ci = 0; ci < src.c; ++ci) {
        const float* sp = src.ch(ci);
        float* op = out.ch(ci);
        for (int y = 0; y < oh; ++y) {
            const Lerp& ly = ty[y];
            const float* r0 = sp + static_cast<size_t>(ly.i0) * src.w;
            const float* r1 = sp + static_cast<size_t>(ly.i1) * src.w;
            for (int x = 0; x < ow; ++x) {
                const Lerp& lx = tx[x];
                float top = r0[lx.i0] * lx.w0 + r0[lx.i1] * lx.w1;
                float bot = r1[lx.i0] * lx.w0 + r1[lx.i1] * lx.w1;
                op[static_cast<size_t>(y) * ow + x] = top * ly.w0 + bot * ly.w1;
            }
        }
    }
    return out;
}

void resize_bilinear_backward(const Tensor& dout, int ih, int iw, Tensor& dsrc) {
    if (dsrc.c != dout.c || dsrc.h != ih || dsrc.w != iw)
        throw std::invalid_argument("resize_bilinear_backward: shape mismatch");
    if (dout.h == ih && dout.w == iw) {
        for (size_t i = 0; i < dout.size(); ++i) dsrc.v[i] += dout.v[i];
        return;
    }
    auto ty = lerp_table(ih, dout.h);
    auto tx = lerp_table(iw, dout.w);
    for (int ci = 0; ci < dout.c; ++ci) {
        const float* gp = dout.ch(ci);
        float* sp = dsrc.ch(ci);
        for (int y = 0; y < dout.h; ++y) {
            const Lerp& ly = ty[y];
            for (int x = 0; x < dout.w; ++x) {
                const Lerp& lx = tx[x];
                float g = gp[static_cast<size_t>(y) * dout.w + x];
                sp[static_cast<size_t>(ly.i0) * iw + lx.i0] += g * ly.w0 * lx.w0;
                sp[static_cast<size_t>(ly.i0) * iw + lx.i1] += g * ly.w0 * lx.w1;
                sp[static_cast<size_t>(ly.i1) * iw + lx.i0] += g * ly.w1 * lx.w0;
                sp[static_cast<size_t>(ly.i1) * iw + lx.i1] += g * ly.w1 * lx.w1;
            }
        }
    }
}

LabelMap resize_nearest(const LabelMap& src, int oh, int ow) {
    if (src.empty() || oh <= 0 || ow <= 0)
        throw std::invalid_argument("resize_nearest: bad shapes");
    if (oh == src.h && ow == src.w) return src;
    LabelMap out(oh, ow);
    double sy = static_cast<double>(src.h) / oh;
    double sx = static_cast<double>(src.w) / ow;
    for (int y = 0; y < oh; ++y) {
        int iy = std::clamp(static_cast<int>((y + 0.5) * sy), 0, src.h - 1);
        for (int x = 0; x < ow; ++x) {
            int ix = std::clamp(static_cast<int>((x + 0.5) * sx), 0, src.w - 1);
            out.at(y, x) = src.at(iy, ix);
        }
    }
    return out;
}

Tensor to_tensor(const ImageU8& img) {
    Tensor t(img.c, img.h, img.w);
    const float k = 1.f / 255.f;
    for (int ci = 0; ci < img.c; ++ci) {
        float* p = t.ch(ci);
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                p[static_cast<size_t>(y) * img.w + x] = img.at(y, x, ci) * k;
    }
    return t;
}

ImageU8 to_image(const Tensor& t) {
    ImageU8 img(t.h, t.w, t.c);
    for (int ci = 0; ci < t.c; ++ci) {
        const float* p = t.ch(ci);
        for (int y = 0; y < t.h; ++y)
            for (int x = 0; x < t.w; ++x) {
                float f = p[static_cast<size_t>(y) * t.w + x] * 255.f;
                img.at(y, x, ci) = static_cast<uint8_t>(std::clamp(f, 0.f, 255.f) + 0.5f);
            }
    }
    return img;
}

}  // namespace cdcl
