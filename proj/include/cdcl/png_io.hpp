#pragma once

#include <array>
#include <string>

#include "cdcl/image.hpp"

namespace cdcl {

// Fixed 256-entry palette used for every indexed label PNG this project
// writes; entry i is the display color of class index i. The stored pixel
// value IS the class index.
const std::array<std::array<uint8_t, 3>, 256>& label_palette();

void write_png_rgb(const std::string& path, const ImageU8& img);
void write_png_gray(const std::string& path, const ImageU8& img);
// 8-bit palette PNG; pixel value = label index.
void write_png_indexed(const std::string& path, const LabelMap& labels);

// Reads RGB/RGBA/gray PNGs as 3-channel RGB.
ImageU8 read_png_rgb(const std::string& path);
// Reads a palette PNG back as raw indices; rejects non-palette files.
LabelMap read_png_indexed(const std::string& path);

}  // namespace cdcl
