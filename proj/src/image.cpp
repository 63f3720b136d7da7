#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>

#include <jpeglib.h>
#include <png.h>

namespace ufv {

namespace {

struct FileCloser {
    FILE* f;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

bool has_suffix(const std::string& s, const char* suf) {
    std::string lower;
    lower.reserve(s.size());
    for (char ch : s) lower.push_back(char(std::tolower(static_cast<unsigned char>(ch))));
    size_t n = std::strlen(suf);
    return lower.size() >= n && lower.compare(lower.size() - n, n, suf) == 0;
}

Image load_png_file(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw RuntimeFailure("cannot open image: " + path);
    FileCloser closer{f};

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw RuntimeFailure("png init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw RuntimeFailure("png init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw RuntimeFailure("corrupt PNG: " + path);
    }
    png_init_io(png, f);
    png_read_info(png, info);

    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0;
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);

    // normalize everything to 8-bit RGB
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Image img(int(height), int(width), 3);
    std::vector<uint8_t> row(size_t(width) * 3);
    for (png_uint_32 y = 0; y < height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < width; ++x)
            for (int ch = 0; ch < 3; ++ch)
                img.at(int(y), int(x), ch) = row[size_t(x) * 3 + ch] / 255.0f;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

struct JpegErr {
    jpeg_error_mgr mgr;
    std::jmp_buf jmp;
};

void jpeg_err_exit(j_common_ptr cinfo) {
    JpegErr* err = reinterpret_cast<JpegErr*>(cinfo->err);
    longjmp(err->jmp, 1);
}

Image load_jpeg_file(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw RuntimeFailure("cannot open image: " + path);
    FileCloser closer{f};

    jpeg_decompress_struct cinfo;
    JpegErr jerr;
    cinfo.err = jpeg_std_error(&jerr.mgr);
    jerr.mgr.error_exit = jpeg_err_exit;
    if (setjmp(jerr.jmp)) {
        jpeg_destroy_decompress(&cinfo);
        throw RuntimeFailure("corrupt JPEG: " + path);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    Image img(int(cinfo.output_height), int(cinfo.output_width), 3);
    std::vector<uint8_t> row(size_t(cinfo.output_width) * 3);
    uint8_t* rowp = row.data();
    while (cinfo.output_scanline < cinfo.output_height) {
        int y = int(cinfo.output_scanline);
        jpeg_read_scanlines(&cinfo, &rowp, 1);
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = row[size_t(x) * 3 + ch] / 255.0f;
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

}  // namespace

Image load_image(const std::string& path) {
    if (has_suffix(path, ".jpg") || has_suffix(path, ".jpeg")) return load_jpeg_file(path);
    if (has_suffix(path, ".png")) return load_png_file(path);
    // sniff by magic
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw RuntimeFailure("cannot open image: " + path);
    uint8_t magic[4] = {0, 0, 0, 0};
    size_t got = std::fread(magic, 1, 4, f);
    std::fclose(f);
    if (got >= 2 && magic[0] == 0xff && magic[1] == 0xd8) return load_jpeg_file(path);
    if (got >= 4 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G') return load_png_file(path);
    throw InvalidArgument("unsupported image format: " + path);
}

void save_png(const Image& img, const std::string& path) {
    if (img.empty()) throw InvalidArgument("cannot save empty image");
    if (img.c != 1 && img.c != 3) throw InvalidArgument("save_png expects 1 or 3 channels");
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw RuntimeFailure("cannot write image: " + path);
    FileCloser closer{f};

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw RuntimeFailure("png init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw RuntimeFailure("png init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw RuntimeFailure("png write failed: " + path);
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, png_uint_32(img.w), png_uint_32(img.h), 8,
                 img.c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(size_t(img.w) * img.c);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                float v = std::clamp(img.at(y, x, ch), 0.0f, 1.0f);
                row[size_t(x) * img.c + ch] = uint8_t(std::lround(v * 255.0f));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<uint8_t> to_u8(const Image& img) {
    std::vector<uint8_t> out(img.numel());
    for (size_t i = 0; i < out.size(); ++i)
        out[i] = uint8_t(std::lround(std::clamp(img.px[i], 0.0f, 1.0f) * 255.0f));
    return out;
}

Image from_u8(const std::vector<uint8_t>& bytes, int h, int w, int c) {
    Image img(h, w, c);
    if (bytes.size() != img.numel()) throw InvalidArgument("from_u8: size mismatch");
    for (size_t i = 0; i < bytes.size(); ++i) img.px[i] = bytes[i] / 255.0f;
    return img;
}

void image_to_chw(const Image& img, float* dst) {
    for (int ch = 0; ch < img.c; ++ch)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x)
                dst[(size_t(ch) * img.h + y) * img.w + x] = img.at(y, x, ch);
}

Image chw_to_image(const float* src, int c, int h, int w) {
    Image img(h, w, c);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                img.at(y, x, ch) = std::clamp(src[(size_t(ch) * h + y) * w + x], 0.0f, 1.0f);
    return img;
}

Image clamp01(Image img) {
    for (float& v : img.px) v = std::clamp(v, 0.0f, 1.0f);
    return img;
}

}  // namespace ufv
