#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include <aqua/rng.hpp>

using namespace aqua;

TEST_CASE("hash_str matches the published FNV-1a constants") {
    CHECK(rng::hash_str("") == 0xCBF29CE484222325ull);
    CHECK(rng::hash_str("a") == 0xAF63DC4C8601EC8Cull);
    CHECK(rng::hash_str("abc") != rng::hash_str("acb"));
}

TEST_CASE("derive is deterministic and separates components") {
    CHECK(rng::derive(1, 2) == rng::derive(1, 2));
    CHECK(rng::derive(1, 2) != rng::derive(2, 1));
    CHECK(rng::derive(1, 2, 3) == rng::derive(rng::derive(1, 2), 3));
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 100; ++s)
        for (std::uint64_t c = 0; c < 100; ++c) seen.insert(rng::derive(s, c));
    CHECK(seen.size() == 100 * 100);
}

TEST_CASE("streams replay exactly and differ across seeds") {
    rng::Stream a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        const auto va = a.next_u64();
        all_equal = all_equal && va == b.next_u64();
        any_diff = any_diff || va != c.next_u64();
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("next_double is uniform on [0,1)") {
    rng::Stream s(7);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double v = s.next_double();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
        sum += v;
    }
    CHECK(sum / n == Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("next_below stays in range and hits every residue") {
    rng::Stream s(11);
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 10000; ++i) {
        const auto v = s.next_below(10);
        REQUIRE(v < 10);
        ++counts[static_cast<std::size_t>(v)];
    }
    for (int c : counts) CHECK(c > 800);
}

TEST_CASE("next_gaussian has standard moments") {
    rng::Stream s(5);
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = s.next_gaussian();
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    CHECK(mean == Catch::Approx(0.0).margin(0.02));
    CHECK(sum2 / n - mean * mean == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("next_laplacian has unit scale") {
    rng::Stream s(6);
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = s.next_laplacian();
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    CHECK(mean == Catch::Approx(0.0).margin(0.03));
    // Laplace(0,1) variance is 2.
    CHECK(sum2 / n - mean * mean == Catch::Approx(2.0).margin(0.12));
}

TEST_CASE("next_poisson matches its rate") {
    rng::Stream s(9);
    const int n = 50000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(s.next_poisson(4.0));
    CHECK(sum / n == Catch::Approx(4.0).margin(0.05));
    CHECK(s.next_poisson(0.0) == 0);
    CHECK(s.next_poisson(-1.0) == 0);
}
