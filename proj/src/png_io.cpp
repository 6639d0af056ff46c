#include "cdcl/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace cdcl {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_or_throw(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw std::runtime_error("png_io: cannot open " + path);
    return f;
}

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

void write_rows(const std::string& path, int h, int w, int color_type,
                const uint8_t* data, size_t row_bytes, const png_color* palette,
                int palette_len) {
    FilePtr f = open_or_throw(path, "wb");
    PngWriter o;
    o.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!o.png) throw std::runtime_error("png_io: create_write_struct failed");
    o.info = png_create_info_struct(o.png);
    if (!o.info) throw std::runtime_error("png_io: create_info_struct failed");
    if (setjmp(png_jmpbuf(o.png))) throw std::runtime_error("png_io: write failed for " + path);

    png_init_io(o.png, f.get());
    png_set_IHDR(o.png, o.info, w, h, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_PLTE(o.png, o.info, palette, palette_len);
    png_write_info(o.png, o.info);
    for (int y = 0; y < h; ++y)
        png_write_row(o.png, const_cast<png_bytep>(data + static_cast<size_t>(y) * row_bytes));
    png_write_end(o.png, o.info);
}

}  // namespace

const std::array<std::array<uint8_t, 3>, 256>& label_palette() {
    static const auto table = [] {
        std::array<std::array<uint8_t, 3>, 256> p{};
        p[0] = {0, 0, 0};
        // Golden-ratio hue wheel so neighboring indices get distinct colors.
        for (int i = 1; i < 256; ++i) {
            double hue = std::fmod(0.61803398875 * i, 1.0) * 6.0;
            double s = (i % 2) ? 1.0 : 0.62;
            double vmax = (i % 3) ? 1.0 : 0.78;
            int sector = static_cast<int>(hue);
            double frac = hue - sector;
            double lo = vmax * (1.0 - s);
            double dn = vmax * (1.0 - s * frac);
            double up = vmax * (1.0 - s * (1.0 - frac));
            double r = 0, g = 0, b = 0;
            switch (sector % 6) {
                case 0: r = vmax; g = up; b = lo; break;
                case 1: r = dn; g = vmax; b = lo; break;
                case 2: r = lo; g = vmax; b = up; break;
                case 3: r = lo; g = dn; b = vmax; break;
                case 4: r = up; g = lo; b = vmax; break;
                case 5: r = vmax; g = lo; b = dn; break;
            }
            p[i] = {static_cast<uint8_t>(r * 255.0 + 0.5), static_cast<uint8_t>(g * 255.0 + 0.5),
                    static_cast<uint8_t>(b * 255.0 + 0.5)};
        }
        return p;
    }();
    return table;
}

void write_png_rgb(const std::string& path, const ImageU8& img) {
    if (img.c != 3 || img.empty()) throw std::invalid_argument("write_png_rgb: need RGB image");
    write_rows(path, img.h, img.w, PNG_COLOR_TYPE_RGB, img.v.data(),
               static_cast<size_t>(img.w) * 3, nullptr, 0);
}

void write_png_gray(const std::string& path, const ImageU8& img) {
    if (img.c != 1 || img.empty()) throw std::invalid_argument("write_png_gray: need 1-channel image");
    write_rows(path, img.h, img.w, PNG_COLOR_TYPE_GRAY, img.v.data(),
               static_cast<size_t>(img.w), nullptr, 0);
}

void write_png_indexed(const std::string& path, const LabelMap& labels) {
    if (labels.empty()) throw std::invalid_argument("write_png_indexed: empty label map");
    png_color palette[256];
    const auto& table = label_palette();
    for (int i = 0; i < 256; ++i)
        palette[i] = {table[i][0], table[i][1], table[i][2]};
    write_rows(path, labels.h, labels.w, PNG_COLOR_TYPE_PALETTE, labels.v.data(),
               static_cast<size_t>(labels.w), palette, 256);
}

ImageU8 read_png_rgb(const std::string& path) {
    FilePtr f = open_or_throw(path, "rb");
    PngReader o;
    o.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!o.png) throw std::runtime_error("png_io: create_read_struct failed");
    o.info = png_create_info_struct(o.png);
    if (!o.info) throw std::runtime_error("png_io: create_info_struct failed");
    if (setjmp(png_jmpbuf(o.png))) throw std::runtime_error("png_io: read failed for " + path);

    png_init_io(o.png, f.get());
    png_read_info(o.png, o.info);
    png_set_strip_16(o.png);
    png_set_palette_to_rgb(o.png);
    png_set_expand_gray_1_2_4_to_8(o.png);
    png_set_strip_alpha(o.png);
    int color_type = png_get_color_type(o.png, o.info);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(o.png);
    png_read_update_info(o.png, o.info);

    ImageU8 img(png_get_image_height(o.png, o.info), png_get_image_width(o.png, o.info), 3);
    if (png_get_rowbytes(o.png, o.info) != static_cast<size_t>(img.w) * 3)
        throw std::runtime_error("png_io: unexpected row size in " + path);
    for (int y = 0; y < img.h; ++y)
        png_read_row(o.png, img.v.data() + static_cast<size_t>(y) * img.w * 3, nullptr);
    return img;
}

LabelMap read_png_indexed(const std::string& path) {
    FilePtr f = open_or_throw(path, "rb");
    PngReader o;
    o.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!o.png) throw std::runtime_error("png_io: create_read_struct failed");
    o.info = png_create_info_struct(o.png);
    if (!o.info) throw std::runtime_error("png_io: create_info_struct failed");
    if (setjmp(png_jmpbuf(o.png))) throw std::runtime_error("png_io: read failed for " + path);

    png_init_io(o.png, f.get());
    png_read_info(o.png, o.info);
    if (png_get_color_type(o.png, o.info) != PNG_COLOR_TYPE_PALETTE ||
        png_get_bit_depth(o.png, o.info) != 8)
        throw std::runtime_error("png_io: " + path + " is not an 8-bit indexed PNG");
    png_read_update_info(o.png, o.info);

    LabelMap labels(png_get_image_height(o.png, o.info), png_get_image_width(o.png, o.info));
    for (int y = 0; y < labels.h; ++y)
        png_read_row(o.png, labels.v.data() + static_cast<size_t>(y) * labels.w, nullptr);
    return labels;
}

}  // namespace cdcl
