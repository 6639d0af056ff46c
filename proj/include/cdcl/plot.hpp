#pragma once

#include <string>
#include <vector>

#include "cdcl/image.hpp"

namespace cdcl {

// 5x7 bitmap text, scaled by `scale`. Unknown characters render as blanks.
void draw_text(ImageU8& img, int x, int y, const std::string& text, uint8_t r, uint8_t g,
               uint8_t b, int scale = 1);

// Vertical bar chart of labeled values in [0, max(values)], one PNG.
void bar_plot_png(const std::string& path, const std::string& title,
                  const std::vector<std::string>& labels, const std::vector<double>& values);

}  // namespace cdcl
