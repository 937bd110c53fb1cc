// PNG and baseline JPEG decode plus PNG write, via libpng / libjpeg.
// Decoded channels are normalized to [0,1]. Palette, grayscale and 16-bit
// PNGs are expanded to 8-bit RGB before normalization; alpha is dropped.
#pragma once

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "spcd/image.hpp"

namespace spcd {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline RgbImage from_rgb8(const std::vector<unsigned char>& buf, int w, int h) {
    RgbImage img(w, h);
    for (std::size_t i = 0; i < img.size(); ++i) {
        img.pixels()[i] = {buf[3 * i] / 255.0, buf[3 * i + 1] / 255.0, buf[3 * i + 2] / 255.0};
    }
    return img;
}

inline RgbImage load_png(std::FILE* fp, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("libpng init failed");
    }

    std::vector<unsigned char> buf;
    std::vector<png_bytep> rows;
    int w = 0, h = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode PNG: " + path);
    }

    png_init_io(png, fp);
    png_read_info(png, info);
    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));
    if (w < 1 || h < 1) longjmp(png_jmpbuf(png), 1);

    int color_type = png_get_color_type(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    std::size_t stride = png_get_rowbytes(png, info);
    buf.resize(stride * h);
    rows.resize(h);
    for (int j = 0; j < h; ++j) rows[j] = buf.data() + stride * j;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (stride != static_cast<std::size_t>(w) * 3)
        throw std::runtime_error("unexpected PNG row layout: " + path);
    return from_rgb8(buf, w, h);
}

struct JpegError {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegError*>(cinfo->err);
    longjmp(err->jump, 1);
}

inline RgbImage load_jpeg(std::FILE* fp, const std::string& path) {
    jpeg_decompress_struct cinfo;
    JpegError jerr;
    cinfo.err = jpeg_std_error(&jerr.mgr);
    jerr.mgr.error_exit = jpeg_error_exit;

    std::vector<unsigned char> buf;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("failed to decode JPEG: " + path);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    int w = static_cast<int>(cinfo.output_width);
    int h = static_cast<int>(cinfo.output_height);
    if (w < 1 || h < 1 || cinfo.output_components != 3) longjmp(jerr.jump, 1);

    std::size_t stride = static_cast<std::size_t>(w) * 3;
    buf.resize(stride * h);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = buf.data() + stride * cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return from_rgb8(buf, w, h);
}

}  // namespace detail

// Decode a PNG or baseline JPEG file, sniffed by magic bytes.
inline RgbImage load_image(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open image file: " + path);

    unsigned char magic[8] = {};
    std::size_t got = std::fread(magic, 1, sizeof(magic), fp.get());
    std::rewind(fp.get());
    if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) return detail::load_png(fp.get(), path);
    if (got >= 2 && magic[0] == 0xff && magic[1] == 0xd8) return detail::load_jpeg(fp.get(), path);
    throw std::runtime_error("unsupported image format (expected PNG or JPEG): " + path);
}

// Write an 8-bit RGB PNG. Channels are clamped and rounded from [0,1].
inline void save_png(const RgbImage& img, const std::string& path) {
    std::vector<unsigned char> buf(img.size() * 3);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const Rgb& p = img.pixels()[i];
        auto to8 = [](double v) {
            double s = v * 255.0 + 0.5;
            if (s < 0.0) s = 0.0;
            if (s > 255.0) s = 255.0;
            return static_cast<unsigned char>(s);
        };
        buf[3 * i] = to8(p.r);
        buf[3 * i + 1] = to8(p.g);
        buf[3 * i + 2] = to8(p.b);
    }

    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot open file for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    std::vector<png_bytep> rows(img.height());
    for (int j = 0; j < img.height(); ++j)
        rows[j] = buf.data() + static_cast<std::size_t>(j) * img.width() * 3;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to write PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace spcd
