#pragma once

#include <cstdint>
#include <random>

namespace dimpim {

// One splitmix64 step; used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Seed for work unit `index` under `master`.  Replicates get independent
// streams that do not depend on how work is partitioned across threads.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Deterministic generator: explicit 64-bit state, no global or thread-local
// state, so results are identical across platforms and thread counts.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on (0, 1): 53-bit mantissa, never returns 0 or 1.
    double uniform01();

    // Standard normal via the Marsaglia polar method; the second deviate of
    // each accepted pair is cached so draws come in a fixed order.
    double normal();

    bool bernoulli(double q);

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dimpim
