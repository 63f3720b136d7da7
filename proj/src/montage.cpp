#include "montage.hpp"

#include <cctype>
#include <map>

namespace ufv {

namespace {

// 5x7 glyphs, one byte per row, low 5 bits used (MSB left)
const uint8_t* glyph_for(char c) {
    static const std::map<char, std::array<uint8_t, 7>> font = {
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
        {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
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
        {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
        {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
        {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
        {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
        {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
        {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
        {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    };
    char up = char(std::toupper(static_cast<unsigned char>(c)));
    auto it = font.find(up);
    if (it == font.end()) it = font.find('.');
    return it->second.data();
}

}  // namespace

void draw_text(Image& img, int x, int y, const std::string& text, float value, int scale) {
    int cx = x;
    for (char c : text) {
        const uint8_t* g = glyph_for(c);
        for (int gy = 0; gy < 7; ++gy)
            for (int gx = 0; gx < 5; ++gx) {
                if (!(g[gy] & (0x10 >> gx))) continue;
                for (int sy = 0; sy < scale; ++sy)
                    for (int sx = 0; sx < scale; ++sx) {
                        int py = y + gy * scale + sy, px = cx + gx * scale + sx;
                        if (py < 0 || py >= img.h || px < 0 || px >= img.w) continue;
                        for (int ch = 0; ch < img.c; ++ch) img.at(py, px, ch) = value;
                    }
            }
        cx += 6 * scale;
    }
}

Image build_montage(const std::vector<std::string>& col_labels,
                    const std::vector<std::string>& row_labels,
                    const std::vector<std::vector<Image>>& cells) {
    if (cells.empty() || cells[0].empty()) throw InvalidArgument("montage: no cells");
    const int rows = int(cells.size());
    const int cols = int(cells[0].size());
    if (int(col_labels.size()) != cols || int(row_labels.size()) != rows)
        throw InvalidArgument("montage: label/cell count mismatch");
    const int cell = cells[0][0].h;
    for (const auto& row : cells)
        for (const auto& c : row)
            if (c.h != cell || c.w != cell || c.c != 3)
                throw InvalidArgument("montage: cells must be square RGB of equal size");

    const int gap = 2, top = 14, left = 52;
    Image out(top + rows * (cell + gap), left + cols * (cell + gap), 3);
    out.px.assign(out.px.size(), 1.0f);

    for (int c = 0; c < cols; ++c)
        draw_text(out, left + c * (cell + gap) + 2, 3, col_labels[size_t(c)], 0.0f, 1);
    for (int r = 0; r < rows; ++r) {
        draw_text(out, 2, top + r * (cell + gap) + cell / 2 - 3, row_labels[size_t(r)], 0.0f, 1);
        for (int c = 0; c < cols; ++c) {
            const Image& src = cells[size_t(r)][size_t(c)];
            int oy = top + r * (cell + gap), ox = left + c * (cell + gap);
            for (int y = 0; y < cell; ++y)
                for (int x = 0; x < cell; ++x)
                    for (int ch = 0; ch < 3; ++ch)
                        out.at(oy + y, ox + x, ch) = src.at(y, x, ch);
        }
    }
    return out;
}

}  // namespace ufv
