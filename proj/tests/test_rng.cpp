#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "spcd/rng.hpp"

using namespace spcd;

TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    int differ = 0;
    for (int i = 0; i < 64; ++i) differ += a.next_u64() != b.next_u64();
    REQUIRE(differ > 60);
}

TEST_CASE("next_double is in [0,1) and roughly uniform") {
    Rng rng(7);
    double sum = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double v = rng.next_double();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
        sum += v;
    }
    REQUIRE(std::fabs(sum / n - 0.5) < 0.01);
}

TEST_CASE("next_below stays in range and hits every value") {
    Rng rng(9);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t v = rng.next_below(7);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    REQUIRE(seen.size() == 7);
}

TEST_CASE("normal samples have the right moments") {
    Rng rng(11);
    const int n = 50000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
        double v = rng.next_normal();
        sum += v;
        sumsq += v * v;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    REQUIRE(std::fabs(mean) < 0.02);
    REQUIRE(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation and seed-stable") {
    std::vector<int> v(100);
    std::iota(v.begin(), v.end(), 0);
    std::vector<int> w = v;
    Rng a(3), b(3);
    a.shuffle(v);
    b.shuffle(w);
    REQUIRE(v == w);
    std::sort(w.begin(), w.end());
    std::vector<int> expect(100);
    std::iota(expect.begin(), expect.end(), 0);
    REQUIRE(w == expect);
}

TEST_CASE("derive_seed separates tags and indices") {
    std::set<std::uint64_t> seeds;
    seeds.insert(derive_seed(1, "a"));
    seeds.insert(derive_seed(1, "b"));
    seeds.insert(derive_seed(2, "a"));
    seeds.insert(derive_seed(1, "a", 1));
    seeds.insert(derive_seed(1, "a", 0, 1));
    REQUIRE(seeds.size() == 5);
    REQUIRE(derive_seed(1, "a", 2, 3) == derive_seed(1, "a", 2, 3));
}

TEST_CASE("fnv1a64 matches reference values") {
    // Published FNV-1a test vectors.
    REQUIRE(fnv1a64("") == 0xcbf29ce484222325ULL);
    REQUIRE(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    REQUIRE(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
