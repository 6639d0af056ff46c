#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cdcl::net {

inline int conv_out_dim(int in, int k, int stride, int pad) {
    int out = (in + 2 * pad - k) / stride + 1;
    if (out <= 0) throw std::invalid_argument("conv: output dimension collapsed to zero");
    return out;
}

// Patch matrix layout: rows = in_c*k*k, cols = oh*ow, column-major, so one
// column holds the receptive field of one output pixel.
template <typename T>
void im2col(const T* src, int c, int h, int w, int k, int stride, int pad, T* col) {
    const int oh = conv_out_dim(h, k, stride, pad);
    const int ow = conv_out_dim(w, k, stride, pad);
    const int rows = c * k * k;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            T* dst = col + static_cast<size_t>(oy * ow + ox) * rows;
            for (int ch = 0; ch < c; ++ch) {
                const T* plane = src + static_cast<size_t>(ch) * h * w;
                for (int ky = 0; ky < k; ++ky) {
                    int sy = oy * stride + ky - pad;
                    for (int kx = 0; kx < k; ++kx) {
                        int sx = ox * stride + kx - pad;
                        *dst++ = (sy >= 0 && sy < h && sx >= 0 && sx < w)
                                     ? plane[static_cast<size_t>(sy) * w + sx]
                                     : T(0);
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-adds patch gradients back onto the image grid.
template <typename T>
void col2im(const T* col, int c, int h, int w, int k, int stride, int pad, T* dst) {
    const int oh = conv_out_dim(h, k, stride, pad);
    const int ow = conv_out_dim(w, k, stride, pad);
    const int rows = c * k * k;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const T* s = col + static_cast<size_t>(oy * ow + ox) * rows;
            for (int ch = 0; ch < c; ++ch) {
                T* plane = dst + static_cast<size_t>(ch) * h * w;
                for (int ky = 0; ky < k; ++ky) {
                    int sy = oy * stride + ky - pad;
                    for (int kx = 0; kx < k; ++kx) {
                        int sx = ox * stride + kx - pad;
                        T v = *s++;
                        if (sy >= 0 && sy < h && sx >= 0 && sx < w)
                            plane[static_cast<size_t>(sy) * w + sx] += v;
                    }
                }
            }
        }
    }
}

// dst = weight * im2col(src) + bias. weight is [out_c][in_c*k*k] row-major,
// dst is [out_c][oh*ow] (the usual channel-major plane layout).
template <typename T>
void conv2d(const T* src, int in_c, int h, int w, const T* weight, const T* bias, int out_c,
            int k, int stride, int pad, T* dst, std::vector<T>& col_buf) {
    using MapRM = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using MapCM = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>>;
    using OutRM = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    const int oh = conv_out_dim(h, k, stride, pad);
    const int ow = conv_out_dim(w, k, stride, pad);
    const int rows = in_c * k * k;
    const int npix = oh * ow;
    col_buf.resize(static_cast<size_t>(rows) * npix);
    im2col(src, in_c, h, w, k, stride, pad, col_buf.data());
    MapRM W(weight, out_c, rows);
    MapCM col(col_buf.data(), rows, npix);
    OutRM out(dst, out_c, npix);
    out.noalias() = W * col;
    if (bias)
        for (int oc = 0; oc < out_c; ++oc) out.row(oc).array() += bias[oc];
}

// Accumulates into d_weight/d_bias and, when d_src is non-null, into d_src.
template <typename T>
void conv2d_backward(const T* src, int in_c, int h, int w, const T* weight, int out_c, int k,
                     int stride, int pad, const T* d_out, T* d_weight, T* d_bias, T* d_src,
                     std::vector<T>& col_buf) {
    using MapRM = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using MapCM = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>>;
    using MutRM = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    const int oh = conv_out_dim(h, k, stride, pad);
    const int ow = conv_out_dim(w, k, stride, pad);
    const int rows = in_c * k * k;
    const int npix = oh * ow;
    col_buf.resize(static_cast<size_t>(rows) * npix);
    im2col(src, in_c, h, w, k, stride, pad, col_buf.data());
    MapRM go(d_out, out_c, npix);
    MapCM col(col_buf.data(), rows, npix);
    MutRM dW(d_weight, out_c, rows);
    dW.noalias() += go * col.transpose();
    if (d_bias) {
        // fixed-order accumulation: Eigen's redux peels to an alignment
        // boundary, which would make the sum depend on the buffer address
        for (int oc = 0; oc < out_c; ++oc) {
            const T* row = d_out + static_cast<size_t>(oc) * npix;
            T acc = 0;
            for (int i = 0; i < npix; ++i) acc += row[i];
            d_bias[oc] += acc;
        }
    }
    if (d_src) {
        MapRM W(weight, out_c, rows);
        Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> dcol = W.transpose() * go;
        col2im(dcol.data(), in_c, h, w, k, stride, pad, d_src);
    }
}

template <typename T>
void leaky_relu(T* x, size_t n, T slope) {
    for (size_t i = 0; i < n; ++i)
        if (x[i] < T(0)) x[i] *= slope;
}

// Backward through the activation given post-activation values: the sign of
// y matches the sign of the pre-activation input, so y alone suffices.
template <typename T>
void leaky_relu_backward(const T* y, T* dy, size_t n, T slope) {
    for (size_t i = 0; i < n; ++i)
        if (y[i] < T(0)) dy[i] *= slope;
}

}  // namespace cdcl::net
