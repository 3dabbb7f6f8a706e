#include "dimpim/rng.hpp"

#include <cmath>

namespace dimpim {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + index * 0x9E3779B97F4A7C15ULL);
}

Rng::Rng(std::uint64_t seed) : eng_(seed) {}

std::uint64_t Rng::next_u64() { return eng_(); }

double Rng::uniform01() {
    // Top 53 bits -> (0,1); add half an ulp so 0 is excluded.
    return (static_cast<double>(eng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform01() - 1.0;
        v = 2.0 * uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

bool Rng::bernoulli(double q) { return uniform01() < q; }

}  // namespace dimpim
