#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "spcd/features.hpp"
#include "spcd/image.hpp"
#include "spcd/rng.hpp"
#include "spcd/slic.hpp"
#include "support/synthetic.hpp"

using namespace spcd;

namespace {

std::vector<double> random_gray(int w, int h, Rng& rng) {
    std::vector<double> g(static_cast<std::size_t>(w) * h);
    for (auto& v : g) v = rng.next_double();
    return g;
}

}  // namespace

TEST_CASE("spcd descriptor on uniform red is all red, no black") {
    RgbImage img = testsupport::uniform_image(32, 32, {1.0, 0.0, 0.0});
    SlicParams sp;
    sp.k = 8;
    SuperpixelMap map = segment(rgb_to_lab(img), sp);
    RgbImage painted = paint_mean_colors(img, map);
    FeatureVector fv = spcd_descriptor(painted, map, {});
    REQUIRE(fv.size() == 10);
    for (int i = 0; i < 5; ++i) REQUIRE(fv.values[i] == 1.0);
    for (int i = 5; i < 10; ++i) REQUIRE(fv.values[i] == 0.0);
}

TEST_CASE("spcd descriptor on uniform black is all black, no red") {
    RgbImage img = testsupport::uniform_image(32, 32, {0.0, 0.0, 0.0});
    SlicParams sp;
    sp.k = 8;
    SuperpixelMap map = segment(rgb_to_lab(img), sp);
    RgbImage painted = paint_mean_colors(img, map);
    FeatureVector fv = spcd_descriptor(painted, map, {});
    REQUIRE(fv.size() == 10);
    // Red dominance is strict, so R=0 never beats t1*(R+G+B)=0.
    for (int i = 0; i < 5; ++i) REQUIRE(fv.values[i] == 0.0);
    for (int i = 5; i < 10; ++i) REQUIRE(fv.values[i] == 1.0);
}

TEST_CASE("spcd descriptor on half red half black splits evenly") {
    RgbImage img = testsupport::half_red_black(64, 64);
    SlicParams sp;
    sp.k = 16;
    SuperpixelMap map = segment(rgb_to_lab(img), sp);
    RgbImage painted = paint_mean_colors(img, map);
    FeatureVector fv = spcd_descriptor(painted, map, {});
    for (int i = 0; i < 5; ++i) REQUIRE(fv.values[i] == Catch::Approx(0.5).margin(0.1));
    for (int i = 5; i < 10; ++i) REQUIRE(fv.values[i] == Catch::Approx(0.5).margin(0.1));
}

TEST_CASE("spcd feature names follow the threshold ladders") {
    RgbImage img = testsupport::uniform_image(16, 16, {0.5, 0.5, 0.5});
    SlicParams sp;
    sp.k = 4;
    SuperpixelMap map = segment(rgb_to_lab(img), sp);
    FeatureVector fv = spcd_descriptor(paint_mean_colors(img, map), map, {});
    std::vector<std::string> expect = {"red_0.4",    "red_0.45",  "red_0.5",  "red_0.55",
                                       "red_0.6",    "black_0.15", "black_0.2", "black_0.25",
                                       "black_0.3",  "black_0.35"};
    REQUIRE(fv.names == expect);
}

TEST_CASE("spcd matches a per-label pixel-count oracle and stays monotone") {
    SpcdParams params;
    for (int trial = 0; trial < 20; ++trial) {
        Rng rng(derive_seed(400, "spcd_prop", static_cast<std::uint64_t>(trial)));
        RgbImage img = testsupport::smooth_random_image(64, 64, rng);
        SlicParams sp;
        sp.k = 20;
        SuperpixelMap map = segment(rgb_to_lab(img), sp);
        RgbImage painted = paint_mean_colors(img, map);
        FeatureVector fv = spcd_descriptor(painted, map, params);

        // Oracle: painted pixels are constant per label, so the first pixel
        // seen for each label is that superpixel's mean color.
        std::vector<Rgb> color(static_cast<std::size_t>(map.count));
        std::vector<bool> have(static_cast<std::size_t>(map.count), false);
        for (std::size_t p = 0; p < painted.size(); ++p) {
            auto l = static_cast<std::size_t>(map.labels[p]);
            if (!have[l]) {
                color[l] = painted.pixels()[p];
                have[l] = true;
            }
        }
        for (std::size_t i = 0; i < params.t1_values.size(); ++i) {
            double t1 = params.t1_values[i];
            int red = 0;
            for (const Rgb& c : color)
                if (c.r > t1 * (c.r + c.g + c.b)) ++red;
            REQUIRE(fv.values[i] ==
                    Catch::Approx(static_cast<double>(red) / map.count).margin(1e-12));
        }
        for (std::size_t i = 0; i < params.t2_values.size(); ++i) {
            double t2 = params.t2_values[i];
            int black = 0;
            for (const Rgb& c : color)
                if (c.r < t2 && c.g < t2 && c.b < t2) ++black;
            REQUIRE(fv.values[5 + i] ==
                    Catch::Approx(static_cast<double>(black) / map.count).margin(1e-12));
        }
        // Red fractions non-increasing in t1, black non-decreasing in t2.
        for (int i = 1; i < 5; ++i) REQUIRE(fv.values[i] <= fv.values[i - 1]);
        for (int i = 6; i < 10; ++i) REQUIRE(fv.values[i] >= fv.values[i - 1]);
    }
}

TEST_CASE("spcd is invariant under label permutation") {
    Rng rng(41);
    RgbImage img = testsupport::smooth_random_image(48, 48, rng);
    SlicParams sp;
    sp.k = 12;
    SuperpixelMap map = segment(rgb_to_lab(img), sp);
    RgbImage painted = paint_mean_colors(img, map);
    FeatureVector base = spcd_descriptor(painted, map, {});

    std::vector<std::int32_t> perm(static_cast<std::size_t>(map.count));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    SuperpixelMap shuffled = map;
    for (auto& l : shuffled.labels) l = perm[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i < perm.size(); ++i)
        shuffled.centers[static_cast<std::size_t>(perm[i])] = map.centers[i];

    FeatureVector permuted = spcd_descriptor(painted, shuffled, {});
    REQUIRE(permuted.values == base.values);
}

TEST_CASE("spcd rejects malformed threshold ladders") {
    RgbImage img = testsupport::uniform_image(8, 8, {0.5, 0.5, 0.5});
    SlicParams sp;
    sp.k = 2;
    SuperpixelMap map = segment(rgb_to_lab(img), sp);
    RgbImage painted = paint_mean_colors(img, map);
    SpcdParams bad;
    bad.t1_values = {0.5, 0.4};
    REQUIRE_THROWS_AS(spcd_descriptor(painted, map, bad), std::invalid_argument);
    bad = SpcdParams{};
    bad.t2_values = {0.0, 0.5};
    REQUIRE_THROWS_AS(spcd_descriptor(painted, map, bad), std::invalid_argument);
    bad = SpcdParams{};
    bad.t1_values.clear();
    REQUIRE_THROWS_AS(spcd_descriptor(painted, map, bad), std::invalid_argument);
}

TEST_CASE("lbp of a constant image lands in one uniform bin") {
    std::vector<double> gray(16 * 16, 0.5);
    FeatureVector fv = lbp_histogram(gray, 16, 16);
    REQUIRE(fv.size() == 59);
    int nonzero = 0;
    for (double v : fv.values)
        if (v != 0.0) ++nonzero;
    REQUIRE(nonzero == 1);
    // Every neighbor equals the center, >= sets all bits: code 255, the
    // highest uniform pattern, which maps to bin 57.
    REQUIRE(fv.values[57] == 1.0);
}

TEST_CASE("lbp matches a brute-force reimplementation") {
    const int w = 9, h = 7;
    Rng rng(51);
    std::vector<double> gray = random_gray(w, h, rng);
    FeatureVector fv = lbp_histogram(gray, w, h);

    const int dx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
    const int dy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
    auto transitions = [](unsigned c) {
        int t = 0;
        for (int i = 0; i < 8; ++i) {
            unsigned a = (c >> i) & 1u, b = (c >> ((i + 1) % 8)) & 1u;
            if (a != b) ++t;
        }
        return t;
    };
    std::vector<int> bin_of(256);
    int next = 0;
    for (unsigned c = 0; c < 256; ++c) bin_of[c] = transitions(c) <= 2 ? next++ : -1;
    for (unsigned c = 0; c < 256; ++c)
        if (bin_of[c] < 0) bin_of[c] = 58;

    std::vector<double> hist(59, 0.0);
    int total = 0;
    for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
            unsigned code = 0;
            for (int i = 0; i < 8; ++i)
                if (gray[static_cast<std::size_t>(y + dy[i]) * w + (x + dx[i])] >=
                    gray[static_cast<std::size_t>(y) * w + x])
                    code |= 1u << i;
            hist[static_cast<std::size_t>(bin_of[code])] += 1.0;
            ++total;
        }
    }
    for (int b = 0; b < 59; ++b)
        REQUIRE(fv.values[static_cast<std::size_t>(b)] == hist[static_cast<std::size_t>(b)] / total);
}

TEST_CASE("lbp histogram sums to one") {
    Rng rng(52);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> gray = random_gray(20, 14, rng);
        FeatureVector fv = lbp_histogram(gray, 20, 14);
        double sum = std::accumulate(fv.values.begin(), fv.values.end(), 0.0);
        REQUIRE(sum == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("lbp is invariant under increasing affine gray maps") {
    Rng rng(53);
    std::vector<double> gray = random_gray(12, 12, rng);
    std::vector<double> mapped(gray.size());
    for (std::size_t i = 0; i < gray.size(); ++i) mapped[i] = 0.5 * gray[i] + 0.25;
    FeatureVector a = lbp_histogram(gray, 12, 12);
    FeatureVector b = lbp_histogram(mapped, 12, 12);
    REQUIRE(a.values == b.values);
}

TEST_CASE("lbp raw mode uses 256 bins") {
    Rng rng(54);
    std::vector<double> gray = random_gray(10, 10, rng);
    LbpParams params;
    params.uniform = false;
    FeatureVector fv = lbp_histogram(gray, 10, 10, params);
    REQUIRE(fv.size() == 256);
    double sum = std::accumulate(fv.values.begin(), fv.values.end(), 0.0);
    REQUIRE(sum == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("lbp validates its inputs") {
    std::vector<double> gray(9, 0.5);
    LbpParams params;
    params.neighbors = 16;
    REQUIRE_THROWS_AS(lbp_histogram(gray, 3, 3, params), std::invalid_argument);
    REQUIRE_THROWS_AS(lbp_histogram(std::vector<double>(4, 0.5), 2, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(lbp_histogram(gray, 4, 3), std::invalid_argument);
}

TEST_CASE("hog of a constant image is all zeros") {
    std::vector<double> gray(32 * 32, 0.7);
    FeatureVector fv = hog_descriptor(gray, 32, 32);
    REQUIRE(fv.size() == 36);  // 2x2 cells, one 2x2 block, 9 bins
    for (double v : fv.values) REQUIRE(v == 0.0);
}

TEST_CASE("hog of a horizontal ramp splits between the wrap bins") {
    const int w = 32, h = 32;
    std::vector<double> gray(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) gray[static_cast<std::size_t>(y) * w + x] = 0.01 * x;
    FeatureVector fv = hog_descriptor(gray, w, h);
    // Gradient angle 0 sits exactly between bin centers 8 and 0.
    for (std::size_t i = 0; i < fv.size(); ++i) {
        int o = static_cast<int>(i % 9);
        if (o == 0 || o == 8)
            REQUIRE(fv.values[i] > 0.0);
        else
            REQUIRE(fv.values[i] == 0.0);
    }
    REQUIRE(fv.values[0] == Catch::Approx(fv.values[8]).margin(1e-12));
}

TEST_CASE("hog of a vertical ramp hits the middle bin only") {
    const int w = 32, h = 32;
    std::vector<double> gray(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) gray[static_cast<std::size_t>(y) * w + x] = 0.01 * y;
    FeatureVector fv = hog_descriptor(gray, w, h);
    // Angle pi/2 is exactly bin 4's center.
    for (std::size_t i = 0; i < fv.size(); ++i) {
        int o = static_cast<int>(i % 9);
        if (o == 4)
            REQUIRE(fv.values[i] > 0.0);
        else
            REQUIRE(fv.values[i] == 0.0);
    }
}

TEST_CASE("hog block norms never exceed one") {
    Rng rng(61);
    const int w = 64, h = 48;
    std::vector<double> gray = random_gray(w, h, rng);
    HogParams params;
    FeatureVector fv = hog_descriptor(gray, w, h, params);
    const int cells_x = w / params.cell_size;
    const int blocks_x = cells_x - params.block_size + 1;
    const int blocks_y = h / params.cell_size - params.block_size + 1;
    const std::size_t block_len =
        static_cast<std::size_t>(params.block_size) * params.block_size * params.bins;
    REQUIRE(fv.size() == static_cast<std::size_t>(blocks_x) * blocks_y * block_len);
    for (std::size_t b = 0; b < fv.size() / block_len; ++b) {
        double sumsq = 0.0;
        for (std::size_t i = 0; i < block_len; ++i) {
            double v = fv.values[b * block_len + i];
            sumsq += v * v;
        }
        REQUIRE(std::sqrt(sumsq) <= 1.0 + 1e-6);
    }
}

TEST_CASE("hog rejects dimensions not divisible by the cell size") {
    std::vector<double> gray(33 * 32, 0.5);
    REQUIRE_THROWS_AS(hog_descriptor(gray, 33, 32), std::invalid_argument);
    std::vector<double> small(16 * 16, 0.5);
    REQUIRE_THROWS_AS(hog_descriptor(small, 16, 16), std::invalid_argument);
}

TEST_CASE("hog is deterministic") {
    Rng rng(62);
    std::vector<double> gray = random_gray(32, 32, rng);
    FeatureVector a = hog_descriptor(gray, 32, 32);
    FeatureVector b = hog_descriptor(gray, 32, 32);
    REQUIRE(a.values == b.values);
    REQUIRE(a.names == b.names);
}

TEST_CASE("color stats of a white image") {
    RgbImage img = testsupport::uniform_image(16, 16, {1.0, 1.0, 1.0});
    FeatureVector fv = color_stats(img, rgb_to_lab(img));
    REQUIRE(fv.size() == 12);
    auto value = [&](const std::string& name) {
        for (std::size_t i = 0; i < fv.size(); ++i)
            if (fv.names[i] == name) return fv.values[i];
        FAIL("missing feature " + name);
        return 0.0;
    };
    REQUIRE(value("r_mean") == 1.0);
    REQUIRE(value("g_mean") == 1.0);
    REQUIRE(value("b_mean") == 1.0);
    REQUIRE(value("lab_l_mean") == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(value("lab_a_mean") == Catch::Approx(128.0 / 255.0).margin(1e-6));
    REQUIRE(value("r_std") == 0.0);
    // One-pass variance of a constant Lab channel carries cancellation noise.
    REQUIRE(value("lab_l_std") == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("color stats match a two-pass oracle") {
    Rng rng(71);
    RgbImage img = testsupport::smooth_random_image(24, 24, rng);
    LabImage lab = rgb_to_lab(img);
    FeatureVector fv = color_stats(img, lab);

    auto two_pass = [&](auto&& get) {
        double mean = 0.0;
        for (std::size_t i = 0; i < img.size(); ++i) mean += get(i);
        mean /= static_cast<double>(img.size());
        double var = 0.0;
        for (std::size_t i = 0; i < img.size(); ++i) {
            double d = get(i) - mean;
            var += d * d;
        }
        var /= static_cast<double>(img.size());
        return std::pair<double, double>(mean, std::sqrt(var));
    };
    auto [rm, rs] = two_pass([&](std::size_t i) { return img.pixels()[i].r; });
    REQUIRE(fv.values[0] == Catch::Approx(rm).margin(1e-12));
    REQUIRE(fv.values[1] == Catch::Approx(rs).margin(1e-12));
    auto [lm, ls] = two_pass([&](std::size_t i) { return lab.pixels()[i].l / 100.0; });
    REQUIRE(fv.values[6] == Catch::Approx(lm).margin(1e-12));
    REQUIRE(fv.values[7] == Catch::Approx(ls).margin(1e-12));
    auto [am, as] = two_pass([&](std::size_t i) { return (lab.pixels()[i].a + 128.0) / 255.0; });
    REQUIRE(fv.values[8] == Catch::Approx(am).margin(1e-12));
    REQUIRE(fv.values[9] == Catch::Approx(as).margin(1e-12));
}

TEST_CASE("color stats values stay in the unit interval") {
    Rng rng(72);
    for (int trial = 0; trial < 5; ++trial) {
        RgbImage img = testsupport::smooth_random_image(16, 16, rng);
        FeatureVector fv = color_stats(img, rgb_to_lab(img));
        for (std::size_t i = 0; i < fv.size(); i += 2) {
            REQUIRE(fv.values[i] >= 0.0);
            REQUIRE(fv.values[i] <= 1.0);
        }
    }
}

TEST_CASE("compose concatenates with prefixes in order") {
    FeatureVector a;
    a.push("x", 1.0);
    a.push("y", 2.0);
    FeatureVector b;
    b.push("x", 3.0);
    FeatureVector out = compose({{"spcd", a}, {"color", b}});
    REQUIRE(out.size() == 3);
    REQUIRE(out.names == std::vector<std::string>{"spcd.x", "spcd.y", "color.x"});
    REQUIRE(out.values == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("compose rejects duplicates and empty input") {
    FeatureVector a;
    a.push("x", 1.0);
    REQUIRE_THROWS_AS(compose({{"p", a}, {"p", a}}), std::invalid_argument);
    REQUIRE_THROWS_AS(compose({}), std::invalid_argument);
}
