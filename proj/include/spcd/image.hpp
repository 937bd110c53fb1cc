// Core image types and pixel-level operations: RGB/CIELAB rasters, crop,
// bilinear resize, sRGB <-> CIELAB conversion and grayscale reduction.
// Channels are kept as doubles normalized to [0,1] from decode onwards;
// the color-threshold descriptors downstream are defined on that range.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace spcd {

struct Rgb {
    double r = 0.0, g = 0.0, b = 0.0;
};

struct Lab {
    double l = 0.0, a = 0.0, b = 0.0;
};

class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {})
        : width_(width), height_(height),
          pixels_(static_cast<std::size_t>(check_dims(width, height)), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }

    Rgb& at(int x, int y) { return pixels_[index(x, y)]; }
    const Rgb& at(int x, int y) const { return pixels_[index(x, y)]; }

    std::vector<Rgb>& pixels() { return pixels_; }
    const std::vector<Rgb>& pixels() const { return pixels_; }

private:
    static std::size_t check_dims(int w, int h) {
        if (w < 1 || h < 1) throw std::invalid_argument("image dimensions must be >= 1");
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    }
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
};

class LabImage {
public:
    LabImage() = default;
    LabImage(int width, int height)
        : width_(width), height_(height),
          pixels_(static_cast<std::size_t>(width) * height) {
        if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be >= 1");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }

    Lab& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    const Lab& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

    std::vector<Lab>& pixels() { return pixels_; }
    const std::vector<Lab>& pixels() const { return pixels_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Lab> pixels_;
};

// Axis-aligned pixel rectangle, top-left anchored.
struct Rect {
    int x = 0, y = 0, w = 0, h = 0;

    bool inside(int img_w, int img_h) const {
        return x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= img_w && y + h <= img_h;
    }
};

namespace detail {

inline double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double c) {
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

// CIE f() with the linear toe below (6/29)^3.
inline double lab_f(double t) {
    constexpr double kDelta3 = 216.0 / 24389.0;   // (6/29)^3
    constexpr double kSlope = 24389.0 / 27.0 / 116.0;  // 1/(3*(6/29)^2)
    return t > kDelta3 ? std::cbrt(t) : kSlope * t + 16.0 / 116.0;
}

inline double lab_f_inv(double t) {
    constexpr double kDelta = 6.0 / 29.0;
    return t > kDelta ? t * t * t : 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

// D65 reference white.
constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

}  // namespace detail

inline Lab rgb_to_lab(const Rgb& p) {
    double r = detail::srgb_to_linear(p.r);
    double g = detail::srgb_to_linear(p.g);
    double b = detail::srgb_to_linear(p.b);
    double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    double fx = detail::lab_f(x / detail::kXn);
    double fy = detail::lab_f(y / detail::kYn);
    double fz = detail::lab_f(z / detail::kZn);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline Rgb lab_to_rgb(const Lab& p) {
    double fy = (p.l + 16.0) / 116.0;
    double fx = fy + p.a / 500.0;
    double fz = fy - p.b / 200.0;
    double x = detail::kXn * detail::lab_f_inv(fx);
    double y = detail::kYn * detail::lab_f_inv(fy);
    double z = detail::kZn * detail::lab_f_inv(fz);
    double r = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
    double g = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
    double b = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
    auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
    return {clamp01(detail::linear_to_srgb(r)), clamp01(detail::linear_to_srgb(g)),
            clamp01(detail::linear_to_srgb(b))};
}

inline LabImage rgb_to_lab(const RgbImage& img) {
    LabImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) out.pixels()[i] = rgb_to_lab(img.pixels()[i]);
    return out;
}

inline RgbImage crop(const RgbImage& img, const Rect& r) {
    if (!r.inside(img.width(), img.height()))
        throw std::invalid_argument("crop rect out of image bounds");
    RgbImage out(r.w, r.h);
    for (int j = 0; j < r.h; ++j)
        for (int i = 0; i < r.w; ++i) out.at(i, j) = img.at(r.x + i, r.y + j);
    return out;
}

// Bilinear sample at a continuous position, edge-clamped.
inline Rgb sample_bilinear(const RgbImage& img, double x, double y) {
    auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double fx = x - x0;
    double fy = y - y0;
    int x0c = clampi(x0, 0, img.width() - 1);
    int x1c = clampi(x0 + 1, 0, img.width() - 1);
    int y0c = clampi(y0, 0, img.height() - 1);
    int y1c = clampi(y0 + 1, 0, img.height() - 1);
    const Rgb& p00 = img.at(x0c, y0c);
    const Rgb& p10 = img.at(x1c, y0c);
    const Rgb& p01 = img.at(x0c, y1c);
    const Rgb& p11 = img.at(x1c, y1c);
    double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy), w01 = (1 - fx) * fy, w11 = fx * fy;
    return {p00.r * w00 + p10.r * w10 + p01.r * w01 + p11.r * w11,
            p00.g * w00 + p10.g * w10 + p01.g * w01 + p11.g * w11,
            p00.b * w00 + p10.b * w10 + p01.b * w01 + p11.b * w11};
}

inline RgbImage resize(const RgbImage& img, int w, int h) {
    if (w < 1 || h < 1) throw std::invalid_argument("resize target must be >= 1 in each dimension");
    if (w == img.width() && h == img.height()) return img;
    RgbImage out(w, h);
    double sx = static_cast<double>(img.width()) / w;
    double sy = static_cast<double>(img.height()) / h;
    for (int j = 0; j < h; ++j) {
        double src_y = (j + 0.5) * sy - 0.5;
        for (int i = 0; i < w; ++i) {
            double src_x = (i + 0.5) * sx - 0.5;
            out.at(i, j) = sample_bilinear(img, src_x, src_y);
        }
    }
    return out;
}

// Rec. 601 luma; texture descriptors run on this.
inline std::vector<double> to_gray(const RgbImage& img) {
    std::vector<double> out(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const Rgb& p = img.pixels()[i];
        out[i] = 0.299 * p.r + 0.587 * p.g + 0.114 * p.b;
    }
    return out;
}

}  // namespace spcd
