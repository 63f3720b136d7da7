#pragma once

#include "image.hpp"

#include <vector>

namespace ufv {

// Labelled comparison grid: one row per entry of row_labels, one column per
// entry of col_labels, all cells the same size. Row labels carry the input
// resolution, column labels the method.
Image build_montage(const std::vector<std::string>& col_labels,
                    const std::vector<std::string>& row_labels,
                    const std::vector<std::vector<Image>>& cells);

// 5x7 bitmap text (digits, A-Z, a few symbols), scaled by `scale`
void draw_text(Image& img, int x, int y, const std::string& text, float value, int scale = 1);

}  // namespace ufv
