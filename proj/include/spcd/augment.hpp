// Natural data augmentation: ROI-centered magnification crops resized to a
// fixed patch size, a set of geometric/photometric transforms, and the
// balancing planner that equalizes per-class patch counts.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcd/image.hpp"
#include "spcd/rng.hpp"

namespace spcd {

struct MagnificationPolicy {
    std::vector<double> factors = {1.25, 1.75, 2.5};
    int output_size = 256;

    void validate() const {
        if (factors.empty()) throw std::invalid_argument("magnify: no factors");
        double prev = 0.0;
        for (double f : factors) {
            if (f < 1.0) throw std::invalid_argument("magnify: factors must be >= 1");
            if (f <= prev) throw std::invalid_argument("magnify: factors must be strictly increasing");
            prev = f;
        }
        if (output_size < 32) throw std::invalid_argument("magnify: output_size must be >= 32");
    }
};

enum class TransformKind {
    mirror,
    rotate45,
    rotate90,
    gaussian_noise,
    salt_pepper,
    translate,
    shear,
    contrast,
    sharpen,
};

inline bool is_stochastic(TransformKind k) {
    return k == TransformKind::gaussian_noise || k == TransformKind::salt_pepper;
}

inline const char* transform_kind_name(TransformKind k) {
    switch (k) {
        case TransformKind::mirror: return "mirror";
        case TransformKind::rotate45: return "rot45";
        case TransformKind::rotate90: return "rot90";
        case TransformKind::gaussian_noise: return "gnoise";
        case TransformKind::salt_pepper: return "saltpepper";
        case TransformKind::translate: return "translate";
        case TransformKind::shear: return "shear";
        case TransformKind::contrast: return "contrast";
        case TransformKind::sharpen: return "sharpen";
    }
    return "unknown";
}

inline std::optional<TransformKind> transform_kind_from_name(const std::string& s) {
    for (TransformKind k :
         {TransformKind::mirror, TransformKind::rotate45, TransformKind::rotate90,
          TransformKind::gaussian_noise, TransformKind::salt_pepper, TransformKind::translate,
          TransformKind::shear, TransformKind::contrast, TransformKind::sharpen}) {
        if (s == transform_kind_name(k)) return k;
    }
    return std::nullopt;
}

struct TransformSpec {
    TransformKind kind = TransformKind::mirror;
    double magnitude = 0.0;               // meaning depends on kind; unused for mirror/rotate
    std::optional<std::uint64_t> seed;    // required iff the kind is stochastic

    void validate() const {
        switch (kind) {
            case TransformKind::mirror:
            case TransformKind::rotate45:
            case TransformKind::rotate90:
                break;
            case TransformKind::gaussian_noise:
                if (!(magnitude > 0.0 && magnitude <= 0.1))
                    throw std::invalid_argument("gaussian_noise: sigma must be in (0,0.1]");
                break;
            case TransformKind::salt_pepper:
                if (!(magnitude > 0.0 && magnitude <= 0.05))
                    throw std::invalid_argument("salt_pepper: p must be in (0,0.05]");
                break;
            case TransformKind::translate:
                if (!(magnitude > 0.0 && magnitude <= 0.2))
                    throw std::invalid_argument("translate: shift must be in (0,0.2] of side");
                break;
            case TransformKind::shear:
                if (!(magnitude > 0.0 && magnitude <= 0.3))
                    throw std::invalid_argument("shear: factor must be in (0,0.3]");
                break;
            case TransformKind::contrast:
                if (!(magnitude >= 0.5 && magnitude <= 1.5))
                    throw std::invalid_argument("contrast: gain must be in [0.5,1.5]");
                break;
            case TransformKind::sharpen:
                if (!(magnitude > 0.0 && magnitude <= 1.0))
                    throw std::invalid_argument("sharpen: amount must be in (0,1]");
                break;
        }
        if (is_stochastic(kind) != seed.has_value())
            throw std::invalid_argument(std::string("transform ") + transform_kind_name(kind) +
                                        (seed ? ": seed given for deterministic kind"
                                              : ": stochastic kind needs a seed"));
    }
};

// The transform set shown by the augmentation figures, in panel order.
inline std::vector<TransformSpec> default_transforms(std::uint64_t seed_placeholder = 0) {
    return {
        {TransformKind::mirror, 0.0, std::nullopt},
        {TransformKind::rotate45, 0.0, std::nullopt},
        {TransformKind::rotate90, 0.0, std::nullopt},
        {TransformKind::gaussian_noise, 0.05, seed_placeholder},
        {TransformKind::salt_pepper, 0.02, seed_placeholder},
        {TransformKind::translate, 0.1, std::nullopt},
        {TransformKind::shear, 0.2, std::nullopt},
    };
}

namespace detail {

inline int reflect_index(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

inline const Rgb& at_reflect(const RgbImage& img, int x, int y) {
    return img.at(reflect_index(x, img.width()), reflect_index(y, img.height()));
}

inline Rgb sample_bilinear_reflect(const RgbImage& img, double x, double y) {
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double fx = x - x0, fy = y - y0;
    const Rgb& p00 = at_reflect(img, x0, y0);
    const Rgb& p10 = at_reflect(img, x0 + 1, y0);
    const Rgb& p01 = at_reflect(img, x0, y0 + 1);
    const Rgb& p11 = at_reflect(img, x0 + 1, y0 + 1);
    double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy), w01 = (1 - fx) * fy, w11 = fx * fy;
    return {p00.r * w00 + p10.r * w10 + p01.r * w01 + p11.r * w11,
            p00.g * w00 + p10.g * w10 + p01.g * w01 + p11.g * w11,
            p00.b * w00 + p10.b * w10 + p01.b * w01 + p11.b * w11};
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

inline Rgb clamp01(const Rgb& p) { return {clamp01(p.r), clamp01(p.g), clamp01(p.b)}; }

}  // namespace detail

// Square crop rectangle of side factor*max(roi side), centered on the ROI,
// shifted (not shrunk) to stay inside the image; shrunk per axis only when
// the side exceeds the image. Always contains the ROI.
inline Rect magnify_rect(int img_w, int img_h, const Rect& roi, double factor) {
    if (!roi.inside(img_w, img_h)) throw std::invalid_argument("magnify: roi out of bounds");
    if (factor < 1.0) throw std::invalid_argument("magnify: factor must be >= 1");
    long side = std::lround(factor * std::max(roi.w, roi.h));
    int cw = static_cast<int>(std::min<long>(side, img_w));
    int ch = static_cast<int>(std::min<long>(side, img_h));
    double cx = roi.x + roi.w / 2.0;
    double cy = roi.y + roi.h / 2.0;
    int x0 = static_cast<int>(std::lround(cx - cw / 2.0));
    int y0 = static_cast<int>(std::lround(cy - ch / 2.0));
    x0 = std::clamp(x0, 0, img_w - cw);
    y0 = std::clamp(y0, 0, img_h - ch);
    x0 = std::max(std::min(x0, roi.x), roi.x + roi.w - cw);
    y0 = std::max(std::min(y0, roi.y), roi.y + roi.h - ch);
    return {x0, y0, cw, ch};
}

// One square patch per magnification factor, each resized to output_size^2.
inline std::vector<RgbImage> natural_magnify(const RgbImage& img, const Rect& roi,
                                             const MagnificationPolicy& policy) {
    policy.validate();
    std::vector<RgbImage> out;
    out.reserve(policy.factors.size());
    for (double f : policy.factors) {
        Rect r = magnify_rect(img.width(), img.height(), roi, f);
        out.push_back(resize(crop(img, r), policy.output_size, policy.output_size));
    }
    return out;
}

// Apply one transform. Geometric kinds fill exposed borders by reflection;
// stochastic kinds are driven entirely by spec.seed; channels are re-clamped.
inline RgbImage apply_transform(const RgbImage& img, const TransformSpec& spec) {
    spec.validate();
    const int w = img.width(), h = img.height();
    switch (spec.kind) {
        case TransformKind::mirror: {
            RgbImage out(w, h);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) out.at(x, y) = img.at(w - 1 - x, y);
            return out;
        }
        case TransformKind::rotate90: {
            // Exact quarter turn; dimensions swap for non-square input.
            RgbImage out(h, w);
            for (int y = 0; y < w; ++y)
                for (int x = 0; x < h; ++x) out.at(x, y) = img.at(y, h - 1 - x);
            return out;
        }
        case TransformKind::rotate45: {
            RgbImage out(w, h);
            const double c = std::sqrt(0.5), s = std::sqrt(0.5);  // cos/sin 45
            const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    double dx = x - cx, dy = y - cy;
                    double sx = cx + c * dx + s * dy;
                    double sy = cy - s * dx + c * dy;
                    out.at(x, y) = detail::sample_bilinear_reflect(img, sx, sy);
                }
            }
            return out;
        }
        case TransformKind::translate: {
            int dx = static_cast<int>(std::lround(spec.magnitude * w));
            int dy = static_cast<int>(std::lround(spec.magnitude * h));
            RgbImage out(w, h);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) out.at(x, y) = detail::at_reflect(img, x - dx, y - dy);
            return out;
        }
        case TransformKind::shear: {
            RgbImage out(w, h);
            const double cy = (h - 1) / 2.0;
            for (int y = 0; y < h; ++y) {
                double shift = spec.magnitude * (y - cy);
                for (int x = 0; x < w; ++x)
                    out.at(x, y) = detail::sample_bilinear_reflect(img, x - shift, y);
            }
            return out;
        }
        case TransformKind::gaussian_noise: {
            Rng rng(*spec.seed);
            RgbImage out(w, h);
            for (std::size_t i = 0; i < img.size(); ++i) {
                const Rgb& p = img.pixels()[i];
                out.pixels()[i] = detail::clamp01(Rgb{p.r + spec.magnitude * rng.next_normal(),
                                                      p.g + spec.magnitude * rng.next_normal(),
                                                      p.b + spec.magnitude * rng.next_normal()});
            }
            return out;
        }
        case TransformKind::salt_pepper: {
            Rng rng(*spec.seed);
            RgbImage out = img;
            for (std::size_t i = 0; i < out.size(); ++i) {
                double u = rng.next_double();
                if (u < spec.magnitude / 2.0)
                    out.pixels()[i] = {0.0, 0.0, 0.0};
                else if (u < spec.magnitude)
                    out.pixels()[i] = {1.0, 1.0, 1.0};
            }
            return out;
        }
        case TransformKind::contrast: {
            RgbImage out(w, h);
            for (std::size_t i = 0; i < img.size(); ++i) {
                const Rgb& p = img.pixels()[i];
                out.pixels()[i] = detail::clamp01(Rgb{0.5 + spec.magnitude * (p.r - 0.5),
                                                      0.5 + spec.magnitude * (p.g - 0.5),
                                                      0.5 + spec.magnitude * (p.b - 0.5)});
            }
            return out;
        }
        case TransformKind::sharpen: {
            // Unsharp mask against a 3x3 binomial blur, reflected borders.
            RgbImage out(w, h);
            static const double k[3] = {0.25, 0.5, 0.25};
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    Rgb blur{};
                    for (int j = -1; j <= 1; ++j) {
                        for (int i = -1; i <= 1; ++i) {
                            const Rgb& q = detail::at_reflect(img, x + i, y + j);
                            double kw = k[i + 1] * k[j + 1];
                            blur.r += kw * q.r;
                            blur.g += kw * q.g;
                            blur.b += kw * q.b;
                        }
                    }
                    const Rgb& p = img.at(x, y);
                    out.at(x, y) = detail::clamp01(Rgb{p.r + spec.magnitude * (p.r - blur.r),
                                                       p.g + spec.magnitude * (p.g - blur.g),
                                                       p.b + spec.magnitude * (p.b - blur.b)});
                }
            }
            return out;
        }
    }
    throw std::logic_error("apply_transform: unreachable");
}

struct AugmentedPatch {
    RgbImage patch;
    std::string source_id;
    int roi_index = 0;
    double factor = 1.0;
    std::string transform;  // "orig" for untransformed magnification crops
    std::uint64_t seed = 0;
};

// Patch id used for filenames and feature rows.
inline std::string patch_id(const AugmentedPatch& p) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "_roi%d_f%g_", p.roi_index, p.factor);
    return p.source_id + buf + p.transform;
}

// Full cross product: every magnification crop, untransformed and once per
// spec. Stochastic seeds are derived per patch from (base_seed, source id,
// factor index, spec index) so adding records never perturbs existing ones.
inline std::vector<AugmentedPatch> augment_record(const RgbImage& img, const Rect& roi,
                                                  const MagnificationPolicy& policy,
                                                  const std::vector<TransformSpec>& specs,
                                                  std::uint64_t base_seed,
                                                  const std::string& source_id,
                                                  int roi_index = 0) {
    std::vector<RgbImage> crops = natural_magnify(img, roi, policy);
    std::vector<AugmentedPatch> out;
    out.reserve(crops.size() * (1 + specs.size()));
    std::string tag = source_id + "#" + std::to_string(roi_index);
    for (std::size_t fi = 0; fi < crops.size(); ++fi) {
        out.push_back({crops[fi], source_id, roi_index, policy.factors[fi], "orig",
                       derive_seed(base_seed, tag, fi, 0)});
        for (std::size_t si = 0; si < specs.size(); ++si) {
            TransformSpec spec = specs[si];
            std::uint64_t seed = derive_seed(base_seed, tag, fi, si + 1);
            if (is_stochastic(spec.kind)) spec.seed = seed;
            out.push_back({apply_transform(crops[fi], spec), source_id, roi_index,
                           policy.factors[fi], transform_kind_name(spec.kind), seed});
        }
    }
    return out;
}

// Variant v of a source under the fixed enumeration: identity crops first
// (one per factor), then (spec, factor) pairs factor-fastest. Returns the
// (factor index, spec index or -1 for identity) pair.
inline std::pair<int, int> variant_slot(int v, int n_factors) {
    if (v < n_factors) return {v, -1};
    int u = v - n_factors;
    return {u % n_factors, u / n_factors};
}

// Balancing plan: both classes are brought to the same target count. The
// default target is the minority class under its full chain (factors *
// patches_per_crop per source); each class then gets floor(target/n) patches
// per source, with the first (target mod n) sources in manifest order taking
// one extra.
struct BalancePlan {
    std::size_t target = 0;
    int minority_base = 0;
    std::size_t minority_extra = 0;
    int majority_base = 0;
    std::size_t majority_extra = 0;

    int count_for(bool minority, std::size_t source_ordinal) const {
        int base = minority ? minority_base : majority_base;
        std::size_t extra = minority ? minority_extra : majority_extra;
        return base + (source_ordinal < extra ? 1 : 0);
    }
    std::size_t minority_total(std::size_t n_minority) const {
        return n_minority * static_cast<std::size_t>(minority_base) + minority_extra;
    }
    std::size_t majority_total(std::size_t n_majority) const {
        return n_majority * static_cast<std::size_t>(majority_base) + majority_extra;
    }
};

inline BalancePlan plan_balance(std::size_t n_minority, std::size_t n_majority, int n_factors,
                                int patches_per_crop,
                                std::optional<std::size_t> target_override = std::nullopt) {
    if (n_minority == 0 || n_majority == 0)
        throw std::invalid_argument("plan_balance: empty class");
    if (n_factors < 1 || patches_per_crop < 1)
        throw std::invalid_argument("plan_balance: multipliers must be >= 1");
    BalancePlan plan;
    std::size_t per_source = static_cast<std::size_t>(n_factors) * patches_per_crop;
    plan.target = target_override ? *target_override : n_minority * per_source;
    plan.minority_base = static_cast<int>(plan.target / n_minority);
    plan.minority_extra = plan.target % n_minority;
    plan.majority_base = static_cast<int>(plan.target / n_majority);
    plan.majority_extra = plan.target % n_majority;
    return plan;
}

}  // namespace spcd
