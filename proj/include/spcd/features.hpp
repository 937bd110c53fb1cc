// Patch descriptors: the superpixel color descriptor (red/black superpixel
// fractions over two threshold ladders), LBP and HOG texture histograms,
// and channel statistics, composable into one named feature vector.
#pragma once

#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcd/image.hpp"
#include "spcd/slic.hpp"

namespace spcd {

struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }

    void push(std::string name, double value) {
        names.push_back(std::move(name));
        values.push_back(value);
    }
};

struct SpcdParams {
    std::vector<double> t1_values = {0.40, 0.45, 0.50, 0.55, 0.60};  // red dominance
    std::vector<double> t2_values = {0.15, 0.20, 0.25, 0.30, 0.35};  // near-black
    int k = 200;

    void validate() const {
        auto check = [](const std::vector<double>& v, const char* which) {
            if (v.empty()) throw std::invalid_argument(std::string("spcd: empty ") + which);
            double prev = 0.0;
            for (double t : v) {
                if (!(t > 0.0 && t < 1.0))
                    throw std::invalid_argument(std::string("spcd: ") + which + " not in (0,1)");
                if (t <= prev && &t != &v.front())
                    throw std::invalid_argument(std::string("spcd: ") + which +
                                                " not strictly increasing");
                prev = t;
            }
        };
        check(t1_values, "t1_values");
        check(t2_values, "t2_values");
        if (k < 1) throw std::invalid_argument("spcd: k must be >= 1");
    }
};

namespace detail {

inline std::string format_threshold(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", t);
    return buf;
}

}  // namespace detail

// Superpixel color descriptor. For each t1, the fraction of superpixels whose
// mean color is red-dominant (R > t1*(R+G+B)); for each t2, the fraction that
// is near-black (all channels < t2). Inequalities are strict, so pure black
// never counts as red. Output: red features in ascending t1 order, then black
// features in ascending t2 order.
inline FeatureVector spcd_descriptor(const RgbImage& painted, const SuperpixelMap& map,
                                     const SpcdParams& params) {
    params.validate();
    std::vector<Rgb> means = superpixel_mean_colors(painted, map);
    const double n = static_cast<double>(map.count);

    FeatureVector out;
    for (double t1 : params.t1_values) {
        std::size_t red = 0;
        for (const Rgb& c : means)
            if (c.r > t1 * (c.r + c.g + c.b)) ++red;
        out.push("red_" + detail::format_threshold(t1), static_cast<double>(red) / n);
    }
    for (double t2 : params.t2_values) {
        std::size_t black = 0;
        for (const Rgb& c : means)
            if (c.r < t2 && c.g < t2 && c.b < t2) ++black;
        out.push("black_" + detail::format_threshold(t2), static_cast<double>(black) / n);
    }
    return out;
}

struct LbpParams {
    int radius = 1;
    int neighbors = 8;
    bool uniform = true;  // 59-bin uniform-pattern mapping; otherwise 256 raw bins

    void validate() const {
        if (radius < 1) throw std::invalid_argument("lbp: radius must be >= 1");
        if (neighbors != 8)
            throw std::invalid_argument("lbp: only the 8-neighbor ring is supported");
    }
};

namespace detail {

// Circular transition count of an 8-bit pattern.
inline int lbp_transitions(unsigned code) {
    unsigned rotated = ((code << 1) | (code >> 7)) & 0xffu;
    unsigned diff = code ^ rotated;
    int t = 0;
    while (diff) {
        t += static_cast<int>(diff & 1u);
        diff >>= 1;
    }
    return t;
}

// code -> histogram bin. Uniform patterns (<= 2 transitions) get their own
// bins in ascending code order; everything else shares the last bin.
inline const std::vector<int>& lbp_uniform_table() {
    static const std::vector<int> table = [] {
        std::vector<int> t(256, -1);
        int next = 0;
        for (unsigned code = 0; code < 256; ++code)
            if (lbp_transitions(code) <= 2) t[code] = next++;
        for (unsigned code = 0; code < 256; ++code)
            if (t[code] < 0) t[code] = next;  // 58: the non-uniform bin
        return t;
    }();
    return table;
}

}  // namespace detail

// LBP code histogram over interior pixels. gray is a row-major raster of
// size w*h; neighbor >= center sets the bit. Ring order is clockwise from
// the top-left neighbor, which keeps bit adjacency circular for the
// uniform-pattern mapping.
inline FeatureVector lbp_histogram(const std::vector<double>& gray, int w, int h,
                                   const LbpParams& params = {}) {
    params.validate();
    const int r = params.radius;
    if (w < 2 * r + 1 || h < 2 * r + 1)
        throw std::invalid_argument("lbp: image smaller than 2*radius+1");
    if (gray.size() != static_cast<std::size_t>(w) * h)
        throw std::invalid_argument("lbp: raster size mismatch");

    const int dx[8] = {-r, 0, r, r, r, 0, -r, -r};
    const int dy[8] = {-r, -r, -r, 0, r, r, r, 0};

    const int nbins = params.uniform ? 59 : 256;
    std::vector<double> hist(static_cast<std::size_t>(nbins), 0.0);
    std::size_t total = 0;
    for (int y = r; y < h - r; ++y) {
        for (int x = r; x < w - r; ++x) {
            double center = gray[static_cast<std::size_t>(y) * w + x];
            unsigned code = 0;
            for (int i = 0; i < 8; ++i) {
                double nb = gray[static_cast<std::size_t>(y + dy[i]) * w + (x + dx[i])];
                if (nb >= center) code |= 1u << i;
            }
            int bin = params.uniform ? detail::lbp_uniform_table()[code] : static_cast<int>(code);
            hist[static_cast<std::size_t>(bin)] += 1.0;
            ++total;
        }
    }
    FeatureVector out;
    for (int b = 0; b < nbins; ++b) {
        char name[16];
        std::snprintf(name, sizeof(name), "bin%02d", b);
        out.push(name, hist[static_cast<std::size_t>(b)] / static_cast<double>(total));
    }
    return out;
}

struct HogParams {
    int cell_size = 16;   // pixels per cell side
    int block_size = 2;   // cells per block side
    int bins = 9;         // unsigned orientation bins over [0, pi)

    void validate() const {
        if (cell_size < 1) throw std::invalid_argument("hog: cell_size must be >= 1");
        if (block_size < 1) throw std::invalid_argument("hog: block_size must be >= 1");
        if (bins < 2) throw std::invalid_argument("hog: bins must be >= 2");
    }
};

// Dense HOG: centered-difference gradients (edge-clamped), per-cell unsigned
// orientation histograms with linear interpolation between the two nearest
// bin centers, then sliding block_size x block_size cell blocks L2-normalized
// with eps = 1e-6 and concatenated row-major.
inline FeatureVector hog_descriptor(const std::vector<double>& gray, int w, int h,
                                    const HogParams& params = {}) {
    params.validate();
    if (gray.size() != static_cast<std::size_t>(w) * h)
        throw std::invalid_argument("hog: raster size mismatch");
    if (w % params.cell_size != 0 || h % params.cell_size != 0)
        throw std::invalid_argument("hog: dimensions not divisible by cell size");
    const int cells_x = w / params.cell_size;
    const int cells_y = h / params.cell_size;
    if (cells_x < params.block_size || cells_y < params.block_size)
        throw std::invalid_argument("hog: image too small for one block");

    const int nb = params.bins;
    const double pi = 3.14159265358979323846;
    std::vector<double> cell_hist(static_cast<std::size_t>(cells_x) * cells_y * nb, 0.0);

    auto g_at = [&](int x, int y) { return gray[static_cast<std::size_t>(y) * w + x]; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double gx = g_at(std::min(x + 1, w - 1), y) - g_at(std::max(x - 1, 0), y);
            double gy = g_at(x, std::min(y + 1, h - 1)) - g_at(x, std::max(y - 1, 0));
            double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            double ang = std::atan2(gy, gx);  // (-pi, pi]
            if (ang < 0.0) ang += pi;         // unsigned: fold to [0, pi)
            if (ang >= pi) ang -= pi;
            // Split between the two nearest bin centers (centers at (i+0.5)*pi/nb).
            double pos = ang / pi * nb - 0.5;
            int b0 = static_cast<int>(std::floor(pos));
            double f = pos - b0;
            int lo = (b0 % nb + nb) % nb;
            int hi = (lo + 1) % nb;
            int cx = x / params.cell_size, cy = y / params.cell_size;
            double* cell = &cell_hist[(static_cast<std::size_t>(cy) * cells_x + cx) * nb];
            cell[lo] += mag * (1.0 - f);
            cell[hi] += mag * f;
        }
    }

    const int bs = params.block_size;
    const int blocks_x = cells_x - bs + 1;
    const int blocks_y = cells_y - bs + 1;
    const double eps = 1e-6;
    FeatureVector out;
    std::vector<double> block(static_cast<std::size_t>(bs) * bs * nb);
    for (int by = 0; by < blocks_y; ++by) {
        for (int bx = 0; bx < blocks_x; ++bx) {
            std::size_t idx = 0;
            double sumsq = 0.0;
            for (int j = 0; j < bs; ++j) {
                for (int i = 0; i < bs; ++i) {
                    const double* cell =
                        &cell_hist[(static_cast<std::size_t>(by + j) * cells_x + (bx + i)) * nb];
                    for (int k = 0; k < nb; ++k) {
                        block[idx++] = cell[k];
                        sumsq += cell[k] * cell[k];
                    }
                }
            }
            double inv = 1.0 / std::sqrt(sumsq + eps * eps);
            idx = 0;
            for (int j = 0; j < bs; ++j) {
                for (int i = 0; i < bs; ++i) {
                    for (int k = 0; k < nb; ++k) {
                        char name[64];
                        std::snprintf(name, sizeof(name), "b%d_%d_c%d_%d_o%d", by, bx, j, i, k);
                        out.push(name, block[idx++] * inv);
                    }
                }
            }
        }
    }
    return out;
}

// Per-channel mean and population standard deviation for R,G,B and CIELAB,
// with Lab channels scaled by their nominal ranges so every value lands in
// [0,1]: L/100, (a+128)/255, (b+128)/255.
inline FeatureVector color_stats(const RgbImage& rgb, const LabImage& lab) {
    if (rgb.width() != lab.width() || rgb.height() != lab.height())
        throw std::invalid_argument("color_stats: dimension mismatch");
    const double n = static_cast<double>(rgb.size());

    auto stats = [&](auto&& get) {
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t i = 0; i < rgb.size(); ++i) {
            double v = get(i);
            sum += v;
            sumsq += v * v;
        }
        double mean = sum / n;
        double var = sumsq / n - mean * mean;
        return std::pair<double, double>(mean, std::sqrt(var < 0.0 ? 0.0 : var));
    };

    FeatureVector out;
    auto add = [&](const char* name, std::pair<double, double> ms) {
        out.push(std::string(name) + "_mean", ms.first);
        out.push(std::string(name) + "_std", ms.second);
    };
    add("r", stats([&](std::size_t i) { return rgb.pixels()[i].r; }));
    add("g", stats([&](std::size_t i) { return rgb.pixels()[i].g; }));
    add("b", stats([&](std::size_t i) { return rgb.pixels()[i].b; }));
    add("lab_l", stats([&](std::size_t i) { return lab.pixels()[i].l / 100.0; }));
    add("lab_a", stats([&](std::size_t i) { return (lab.pixels()[i].a + 128.0) / 255.0; }));
    add("lab_b", stats([&](std::size_t i) { return (lab.pixels()[i].b + 128.0) / 255.0; }));
    return out;
}

// Concatenate descriptor parts in order, prefixing names ("spcd.", "lbp.", ...).
inline FeatureVector compose(const std::vector<std::pair<std::string, FeatureVector>>& parts) {
    if (parts.empty()) throw std::invalid_argument("compose: no parts");
    FeatureVector out;
    std::set<std::string> seen;
    for (const auto& [prefix, part] : parts) {
        for (std::size_t i = 0; i < part.size(); ++i) {
            std::string name = prefix + "." + part.names[i];
            if (!seen.insert(name).second)
                throw std::invalid_argument("compose: duplicate feature name " + name);
            out.push(std::move(name), part.values[i]);
        }
    }
    return out;
}

}  // namespace spcd
