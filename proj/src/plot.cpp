#include "cdcl/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "cdcl/png_io.hpp"

namespace cdcl {

namespace {

// 5x7 glyphs, one byte per row, low 5 bits used (MSB = left column).
struct Glyph {
    char ch;
    uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
    {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
};

const uint8_t* glyph_rows(char c) {
    char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (const Glyph& g : kFont)
        if (g.ch == u) return g.rows;
    return nullptr;
}

void fill_rect(ImageU8& img, int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, img.w);
    y1 = std::min(y1, img.h);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
}

}  // namespace

void draw_text(ImageU8& img, int x, int y, const std::string& text, uint8_t r, uint8_t g,
               uint8_t b, int scale) {
    int cx = x;
    for (char c : text) {
        const uint8_t* rows = glyph_rows(c);
        if (rows) {
            for (int ry = 0; ry < 7; ++ry)
                for (int rx = 0; rx < 5; ++rx)
                    if (rows[ry] & (0x10 >> rx))
                        fill_rect(img, cx + rx * scale, y + ry * scale, cx + (rx + 1) * scale,
                                  y + (ry + 1) * scale, r, g, b);
        }
        cx += 6 * scale;
    }
}

void bar_plot_png(const std::string& path, const std::string& title,
                  const std::vector<std::string>& labels, const std::vector<double>& values) {
    if (labels.size() != values.size())
        throw std::invalid_argument("bar_plot_png: labels/values size mismatch");
    const int n = static_cast<int>(values.size());
    const int bar_w = 42, gap = 14, left = 36, right = 12, top = 24, bottom = 14;
    const int plot_h = 110;
    const int w = left + std::max(n, 1) * (bar_w + gap) + right;
    const int h = top + plot_h + bottom;
    ImageU8 img(h, w, 3, 255);

    double vmax = 0.0;
    for (double v : values) vmax = std::max(vmax, v);
    if (vmax <= 0.0) vmax = 1.0;

    draw_text(img, 4, 4, title, 0, 0, 0);
    // y axis with min/max labels
    fill_rect(img, left - 1, top, left, top + plot_h + 1, 0, 0, 0);
    fill_rect(img, left - 1, top + plot_h, w - right, top + plot_h + 1, 0, 0, 0);
    char num[16];
    std::snprintf(num, sizeof num, "%.2f", vmax);
    draw_text(img, 2, top - 3, num, 0, 0, 0);
    draw_text(img, 2, top + plot_h - 4, "0", 0, 0, 0);

    const uint8_t palette[4][3] = {{66, 133, 244}, {219, 68, 55}, {244, 180, 0}, {15, 157, 88}};
    for (int i = 0; i < n; ++i) {
        int x0 = left + gap / 2 + i * (bar_w + gap);
        double v = std::clamp(values[i], 0.0, vmax);
        int bh = static_cast<int>(v / vmax * plot_h + 0.5);
        const uint8_t* col = palette[i % 4];
        fill_rect(img, x0, top + plot_h - bh, x0 + bar_w, top + plot_h, col[0], col[1], col[2]);
        std::snprintf(num, sizeof num, "%.3f", values[i]);
        draw_text(img, x0, top + plot_h - bh - 9, num, 0, 0, 0);
        draw_text(img, x0, top + plot_h + 4, labels[i].substr(0, 7), 0, 0, 0);
    }
    write_png_rgb(path, img);
}

}  // namespace cdcl
