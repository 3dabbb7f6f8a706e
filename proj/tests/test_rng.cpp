#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include <doctest.h>

#include "dimpim/rng.hpp"

using dimpim::Rng;

TEST_SUITE("rng") {

TEST_CASE("derive_seed is deterministic and spreads indices apart") {
    const std::uint64_t a = dimpim::derive_seed(42, 0);
    CHECK(a == dimpim::derive_seed(42, 0));

    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(dimpim::derive_seed(42, i));
    CHECK(seen.size() == 10000);  // no collisions over a realistic index range

    CHECK(dimpim::derive_seed(42, 1) != dimpim::derive_seed(43, 1));
}

TEST_CASE("splitmix64 scrambles consecutive inputs") {
    // Identical low bits in, decorrelated words out.
    const std::uint64_t x = dimpim::splitmix64(1);
    const std::uint64_t y = dimpim::splitmix64(2);
    CHECK(x != y);
    CHECK(dimpim::splitmix64(1) == x);
}

TEST_CASE("uniform01 stays inside the open unit interval") {
    Rng rng(7);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    // Mean of n uniforms has sd = 1/sqrt(12 n); allow five of those.
    CHECK(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("normal draws have the right first two moments") {
    Rng rng(11);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 5.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("generators with equal seeds replay the identical stream") {
    Rng a(123), b(123);
    for (int i = 0; i < 1000; ++i) {
        // Mix the call types so the cached second normal deviate is covered.
        CHECK(a.normal() == b.normal());
        CHECK(a.uniform01() == b.uniform01());
        CHECK(a.normal() == b.normal());
        CHECK(a.bernoulli(0.3) == b.bernoulli(0.3));
    }
}

TEST_CASE("bernoulli frequency tracks its probability") {
    Rng rng(5);
    const int n = 100000;
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += rng.bernoulli(0.3) ? 1 : 0;
    const double se = std::sqrt(0.3 * 0.7 / n);
    CHECK(std::abs(hits / static_cast<double>(n) - 0.3) < 5.0 * se);
}

}  // TEST_SUITE
