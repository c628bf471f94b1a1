#pragma once

#include <cstdint>

namespace jadce {

/// Deterministic pseudo-random source. All randomness in the project flows
/// through this class so that (config, seed) pins every artifact bit-exactly.
/// Normal variates use Box-Muller on top of a splitmix64-seeded xoshiro-style
/// counter generator rather than std:: distributions, whose sequences are
/// implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();

    /// Standard normal.
    double normal();

    /// Normal with the given standard deviation.
    double normal(double stddev) { return stddev * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    /// Stream derivation: hash (seed, stream) into an independent seed.
    /// Used to give every sample index its own reproducible generator.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace jadce
