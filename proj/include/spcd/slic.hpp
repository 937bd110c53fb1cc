// SLIC superpixel over-segmentation: localized k-means in the joint
// CIELAB + pixel-position space with distance D = d_lab + (m/S) * d_xy,
// followed by 4-connectivity enforcement and mean-color painting.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "spcd/image.hpp"

namespace spcd {

struct SlicParams {
    int k = 200;                       // target superpixel count
    double m = 10.0;                   // compactness weight
    int iterations = 10;               // assign/update rounds
    double min_region_fraction = 0.25; // fragments below fraction*S^2 get absorbed

    void validate() const {
        if (k < 1) throw std::invalid_argument("slic: k must be >= 1");
        if (!(m > 0.0)) throw std::invalid_argument("slic: m must be > 0");
        if (iterations < 1) throw std::invalid_argument("slic: iterations must be >= 1");
        if (!(min_region_fraction > 0.0 && min_region_fraction < 1.0))
            throw std::invalid_argument("slic: min_region_fraction must be in (0,1)");
    }
};

struct SuperpixelCenter {
    double l = 0, a = 0, b = 0, x = 0, y = 0;
};

struct SuperpixelMap {
    int width = 0;
    int height = 0;
    int count = 0;
    std::vector<std::int32_t> labels;      // row-major, one per pixel, in [0, count)
    std::vector<SuperpixelCenter> centers; // one per label

    std::vector<std::size_t> region_sizes() const {
        std::vector<std::size_t> sizes(static_cast<std::size_t>(count), 0);
        for (auto l : labels) sizes[static_cast<std::size_t>(l)]++;
        return sizes;
    }
};

// Optimization trace, filled by segment() when requested. iteration_costs
// holds the total assignment cost after each assignment pass; the guarded
// center update keeps the sequence non-increasing. max_center_chebyshev is
// max over pixels of the Chebyshev distance to the owning center at the
// final assignment.
struct SegmentationTrace {
    std::vector<double> iteration_costs;
    double max_center_chebyshev = 0.0;
    int seeded_center_count = 0;
    int pre_connectivity_count = 0;
};

// Eq.: S = sqrt(N/k), the nominal superpixel side length.
inline double grid_interval(std::size_t n_pixels, int k) {
    if (n_pixels < 1) throw std::invalid_argument("grid_interval: empty image");
    if (k < 1) throw std::invalid_argument("grid_interval: k must be >= 1");
    return std::sqrt(static_cast<double>(n_pixels) / static_cast<double>(k));
}

namespace detail {

inline double slic_distance(const Lab& p, double px, double py, const SuperpixelCenter& c,
                            double m_over_s) {
    double dl = p.l - c.l, da = p.a - c.a, db = p.b - c.b;
    double d_lab = std::sqrt(dl * dl + da * da + db * db);
    double dx = px - c.x, dy = py - c.y;
    double d_xy = std::sqrt(dx * dx + dy * dy);
    return d_lab + m_over_s * d_xy;
}

// Squared L2 of right/left and down/up Lab differences, edge-clamped.
inline double lab_gradient(const LabImage& img, int x, int y) {
    auto cl = [&](int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); };
    int w = img.width(), h = img.height();
    const Lab& xr = img.at(cl(x + 1, w - 1), y);
    const Lab& xl = img.at(cl(x - 1, w - 1), y);
    const Lab& yd = img.at(x, cl(y + 1, h - 1));
    const Lab& yu = img.at(x, cl(y - 1, h - 1));
    double gx = (xr.l - xl.l) * (xr.l - xl.l) + (xr.a - xl.a) * (xr.a - xl.a) +
                (xr.b - xl.b) * (xr.b - xl.b);
    double gy = (yd.l - yu.l) * (yd.l - yu.l) + (yd.a - yu.a) * (yd.a - yu.a) +
                (yd.b - yu.b) * (yd.b - yu.b);
    return gx + gy;
}

}  // namespace detail

// Re-establish 4-connectivity: split disconnected label fragments into their
// own regions, absorb fragments smaller than min_region_fraction * S^2 into
// the largest adjacent region, compact label ids, recompute centroids.
inline SuperpixelMap enforce_connectivity(const SuperpixelMap& map, const LabImage& lab,
                                          double min_region_fraction, double interval) {
    const int w = map.width, h = map.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (lab.width() != w || lab.height() != h)
        throw std::invalid_argument("enforce_connectivity: dimension mismatch");

    // Connected components in raster discovery order.
    std::vector<std::int32_t> comp(n, -1);
    std::vector<std::size_t> comp_size;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (comp[start] >= 0) continue;
        std::int32_t id = static_cast<std::int32_t>(comp_size.size());
        std::int32_t label = map.labels[start];
        std::size_t size = 0;
        comp[start] = id;
        stack.assign(1, start);
        while (!stack.empty()) {
            std::size_t p = stack.back();
            stack.pop_back();
            ++size;
            int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            const std::size_t nb[4] = {p - 1, p + 1, p - w, p + w};
            const bool ok[4] = {x > 0, x < w - 1, y > 0, y < h - 1};
            for (int i = 0; i < 4; ++i) {
                if (!ok[i]) continue;
                std::size_t q = nb[i];
                if (comp[q] < 0 && map.labels[q] == label) {
                    comp[q] = id;
                    stack.push_back(q);
                }
            }
        }
        comp_size.push_back(size);
    }

    const std::size_t ncomp = comp_size.size();
    const double threshold = min_region_fraction * interval * interval;

    std::vector<std::int32_t> parent(ncomp);
    for (std::size_t i = 0; i < ncomp; ++i) parent[i] = static_cast<std::int32_t>(i);
    auto find = [&](std::int32_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };

    if (ncomp > 1) {
        bool merged = true;
        while (merged) {
            merged = false;
            // Best (largest, then lowest-id) adjacent root per root, from a pixel scan.
            std::vector<std::int32_t> best(ncomp, -1);
            auto offer = [&](std::int32_t a, std::int32_t b) {
                if (a == b) return;
                std::int32_t& cur = best[a];
                if (cur < 0 || comp_size[b] > comp_size[cur] ||
                    (comp_size[b] == comp_size[cur] && b < cur))
                    cur = b;
            };
            for (std::size_t p = 0; p < n; ++p) {
                int x = static_cast<int>(p % w);
                if (x < w - 1) {
                    std::int32_t a = find(comp[p]), b = find(comp[p + 1]);
                    offer(a, b);
                    offer(b, a);
                }
                if (p + w < n) {
                    std::int32_t a = find(comp[p]), b = find(comp[p + w]);
                    offer(a, b);
                    offer(b, a);
                }
            }
            for (std::size_t r = 0; r < ncomp; ++r) {
                std::int32_t a = static_cast<std::int32_t>(r);
                if (find(a) != a || best[a] < 0) continue;
                if (static_cast<double>(comp_size[a]) >= threshold) continue;
                std::int32_t b = find(best[a]);
                if (b == a) continue;
                parent[a] = b;
                comp_size[b] += comp_size[a];
                merged = true;
            }
        }
    }

    // Compact surviving roots to dense labels in raster order of first pixel.
    std::vector<std::int32_t> new_label(ncomp, -1);
    SuperpixelMap out;
    out.width = w;
    out.height = h;
    out.labels.resize(n);
    std::int32_t next = 0;
    for (std::size_t p = 0; p < n; ++p) {
        std::int32_t root = find(comp[p]);
        if (new_label[root] < 0) new_label[root] = next++;
        out.labels[p] = new_label[root];
    }
    out.count = next;

    out.centers.assign(static_cast<std::size_t>(out.count), SuperpixelCenter{});
    std::vector<std::size_t> counts(static_cast<std::size_t>(out.count), 0);
    for (std::size_t p = 0; p < n; ++p) {
        std::int32_t l = out.labels[p];
        const Lab& px = lab.pixels()[p];
        SuperpixelCenter& c = out.centers[l];
        c.l += px.l;
        c.a += px.a;
        c.b += px.b;
        c.x += static_cast<double>(p % w);
        c.y += static_cast<double>(p / w);
        counts[l]++;
    }
    for (std::int32_t l = 0; l < out.count; ++l) {
        double inv = 1.0 / static_cast<double>(counts[l]);
        out.centers[l].l *= inv;
        out.centers[l].a *= inv;
        out.centers[l].b *= inv;
        out.centers[l].x *= inv;
        out.centers[l].y *= inv;
    }
    return out;
}

// SLIC segmentation. Deterministic: grid seeding with lowest-gradient
// perturbation, windowed assignment with lower-id tie break, mean updates
// guarded so the total assignment cost never increases, empty clusters
// dropped, then connectivity enforcement.
inline SuperpixelMap segment(const LabImage& img, const SlicParams& params,
                             SegmentationTrace* trace = nullptr) {
    params.validate();
    const int w = img.width(), h = img.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (n == 0) throw std::invalid_argument("slic: empty image");
    if (static_cast<std::size_t>(params.k) > n)
        throw std::invalid_argument("slic: k exceeds pixel count");

    const double interval = grid_interval(n, params.k);
    const double m_over_s = params.m / interval;

    // Seed grid: nx*ny ~ k, pixel-centered spacing close to the nominal S.
    int ny = static_cast<int>(std::lround(std::sqrt(static_cast<double>(params.k) * h / w)));
    ny = std::clamp(ny, 1, h);
    int nx = static_cast<int>(std::lround(static_cast<double>(params.k) / ny));
    nx = std::clamp(nx, 1, w);
    const double spacing_x = static_cast<double>(w) / nx;
    const double spacing_y = static_cast<double>(h) / ny;

    std::vector<SuperpixelCenter> centers;
    centers.reserve(static_cast<std::size_t>(nx) * ny);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            double cx = (ix + 0.5) * spacing_x - 0.5;
            double cy = (iy + 0.5) * spacing_y - 0.5;
            int px = std::clamp(static_cast<int>(std::lround(cx)), 0, w - 1);
            int py = std::clamp(static_cast<int>(std::lround(cy)), 0, h - 1);
            // Move to the strictly lowest-gradient pixel in the 3x3 block.
            double best_grad = detail::lab_gradient(img, px, py);
            int bx = px, by = py;
            bool moved = false;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    int qx = px + dx, qy = py + dy;
                    if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
                    double g = detail::lab_gradient(img, qx, qy);
                    if (g < best_grad) {
                        best_grad = g;
                        bx = qx;
                        by = qy;
                        moved = true;
                    }
                }
            }
            SuperpixelCenter c;
            if (moved) {
                c.x = bx;
                c.y = by;
            } else {
                c.x = cx;
                c.y = cy;
            }
            const Lab& sample = img.at(bx, by);
            c.l = sample.l;
            c.a = sample.a;
            c.b = sample.b;
            centers.push_back(c);
        }
    }
    if (trace) {
        trace->iteration_costs.clear();
        trace->seeded_center_count = static_cast<int>(centers.size());
    }

    // Seed labels by grid cell so every pixel owns a valid label from the start.
    std::vector<std::int32_t> labels(n);
    for (std::size_t p = 0; p < n; ++p) {
        int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
        int ix = std::min(nx - 1, static_cast<int>(x / spacing_x));
        int iy = std::min(ny - 1, static_cast<int>(y / spacing_y));
        labels[p] = static_cast<std::int32_t>(iy) * nx + ix;
    }

    std::vector<double> dist(n);
    std::vector<double> sums;      // 5 accumulators + count per cluster
    std::vector<double> old_cost, new_cost;

    for (int iter = 0; iter < params.iterations; ++iter) {
        const std::size_t nc = centers.size();

        // Baseline: distance to the currently assigned center, then let each
        // center improve pixels inside its 2S x 2S window.
        for (std::size_t p = 0; p < n; ++p) {
            int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            dist[p] = detail::slic_distance(img.pixels()[p], x, y, centers[labels[p]], m_over_s);
        }
        for (std::size_t c = 0; c < nc; ++c) {
            const SuperpixelCenter& ctr = centers[c];
            int x0 = std::max(0, static_cast<int>(std::floor(ctr.x - interval)));
            int x1 = std::min(w - 1, static_cast<int>(std::ceil(ctr.x + interval)));
            int y0 = std::max(0, static_cast<int>(std::floor(ctr.y - interval)));
            int y1 = std::min(h - 1, static_cast<int>(std::ceil(ctr.y + interval)));
            for (int y = y0; y <= y1; ++y) {
                std::size_t row = static_cast<std::size_t>(y) * w;
                for (int x = x0; x <= x1; ++x) {
                    std::size_t p = row + x;
                    double d = detail::slic_distance(img.pixels()[p], x, y, ctr, m_over_s);
                    std::int32_t cl = static_cast<std::int32_t>(c);
                    if (d < dist[p] || (d == dist[p] && cl < labels[p])) {
                        dist[p] = d;
                        labels[p] = cl;
                    }
                }
            }
        }
        if (trace) {
            double total = 0.0;
            for (std::size_t p = 0; p < n; ++p) total += dist[p];
            trace->iteration_costs.push_back(total);
        }

        // Mean update, guarded: keep the old center if the mean would raise
        // this cluster's assignment cost (the mean does not minimize the
        // non-squared distance, so this is what makes the cost monotone).
        sums.assign(nc * 6, 0.0);
        for (std::size_t p = 0; p < n; ++p) {
            int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            const Lab& px = img.pixels()[p];
            double* s = &sums[static_cast<std::size_t>(labels[p]) * 6];
            s[0] += px.l;
            s[1] += px.a;
            s[2] += px.b;
            s[3] += x;
            s[4] += y;
            s[5] += 1.0;
        }
        std::vector<SuperpixelCenter> means(nc);
        for (std::size_t c = 0; c < nc; ++c) {
            const double* s = &sums[c * 6];
            if (s[5] > 0.0) {
                means[c] = {s[0] / s[5], s[1] / s[5], s[2] / s[5], s[3] / s[5], s[4] / s[5]};
            }
        }
        old_cost.assign(nc, 0.0);
        new_cost.assign(nc, 0.0);
        for (std::size_t p = 0; p < n; ++p) {
            int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            std::size_t c = static_cast<std::size_t>(labels[p]);
            old_cost[c] += dist[p];
            new_cost[c] += detail::slic_distance(img.pixels()[p], x, y, means[c], m_over_s);
        }
        std::vector<std::int32_t> remap(nc, -1);
        std::vector<SuperpixelCenter> kept;
        kept.reserve(nc);
        for (std::size_t c = 0; c < nc; ++c) {
            if (sums[c * 6 + 5] == 0.0) continue;  // empty cluster dropped
            remap[c] = static_cast<std::int32_t>(kept.size());
            kept.push_back(new_cost[c] <= old_cost[c] ? means[c] : centers[c]);
        }
        if (kept.size() != nc) {
            for (std::size_t p = 0; p < n; ++p) labels[p] = remap[labels[p]];
        }
        centers = std::move(kept);
    }

    if (trace) {
        double max_cheb = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            const SuperpixelCenter& c = centers[labels[p]];
            max_cheb = std::max(max_cheb, std::max(std::abs(x - c.x), std::abs(y - c.y)));
        }
        trace->max_center_chebyshev = max_cheb;
        trace->pre_connectivity_count = static_cast<int>(centers.size());
    }

    SuperpixelMap raw;
    raw.width = w;
    raw.height = h;
    raw.count = static_cast<int>(centers.size());
    raw.labels = std::move(labels);
    raw.centers = std::move(centers);
    return enforce_connectivity(raw, img, params.min_region_fraction, interval);
}

// Eq.: S_i = mean(P(R,G,B)) — every pixel takes its superpixel's mean color.
inline RgbImage paint_mean_colors(const RgbImage& rgb, const SuperpixelMap& map) {
    if (rgb.width() != map.width || rgb.height() != map.height)
        throw std::invalid_argument("paint_mean_colors: dimension mismatch");
    std::vector<double> acc(static_cast<std::size_t>(map.count) * 3, 0.0);
    std::vector<std::size_t> cnt(static_cast<std::size_t>(map.count), 0);
    for (std::size_t p = 0; p < rgb.size(); ++p) {
        std::size_t l = static_cast<std::size_t>(map.labels[p]);
        const Rgb& px = rgb.pixels()[p];
        acc[l * 3] += px.r;
        acc[l * 3 + 1] += px.g;
        acc[l * 3 + 2] += px.b;
        cnt[l]++;
    }
    RgbImage out(rgb.width(), rgb.height());
    for (std::size_t p = 0; p < rgb.size(); ++p) {
        std::size_t l = static_cast<std::size_t>(map.labels[p]);
        double inv = 1.0 / static_cast<double>(cnt[l]);
        out.pixels()[p] = {acc[l * 3] * inv, acc[l * 3 + 1] * inv, acc[l * 3 + 2] * inv};
    }
    return out;
}

// Mean RGB per superpixel, same accumulation as paint_mean_colors.
inline std::vector<Rgb> superpixel_mean_colors(const RgbImage& rgb, const SuperpixelMap& map) {
    if (rgb.width() != map.width || rgb.height() != map.height)
        throw std::invalid_argument("superpixel_mean_colors: dimension mismatch");
    std::vector<double> acc(static_cast<std::size_t>(map.count) * 3, 0.0);
    std::vector<std::size_t> cnt(static_cast<std::size_t>(map.count), 0);
    for (std::size_t p = 0; p < rgb.size(); ++p) {
        std::size_t l = static_cast<std::size_t>(map.labels[p]);
        const Rgb& px = rgb.pixels()[p];
        acc[l * 3] += px.r;
        acc[l * 3 + 1] += px.g;
        acc[l * 3 + 2] += px.b;
        cnt[l]++;
    }
    std::vector<Rgb> means(static_cast<std::size_t>(map.count));
    for (std::size_t l = 0; l < means.size(); ++l) {
        double inv = 1.0 / static_cast<double>(cnt[l]);
        means[l] = {acc[l * 3] * inv, acc[l * 3 + 1] * inv, acc[l * 3 + 2] * inv};
    }
    return means;
}

// Overlay label boundaries for debug output.
inline RgbImage draw_boundaries(const RgbImage& rgb, const SuperpixelMap& map,
                                Rgb line = {1.0, 1.0, 0.0}) {
    RgbImage out = rgb;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            std::size_t p = static_cast<std::size_t>(y) * map.width + x;
            bool edge = (x + 1 < map.width && map.labels[p] != map.labels[p + 1]) ||
                        (y + 1 < map.height && map.labels[p] != map.labels[p + map.width]);
            if (edge) out.pixels()[p] = line;
        }
    }
    return out;
}

}  // namespace spcd
