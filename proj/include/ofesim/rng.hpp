#pragma once

#include <cstdint>
#include <random>

namespace ofesim {

/// Deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Every derived variate is produced by an algorithm implemented
/// here (the standard library distributions are implementation-defined), so
/// a given seed yields the same draws on every platform:
///
///   uniform()        top 53 bits of one engine word, scaled to [0, 1)
///   uniform_index(n) rejection sampling on 64-bit words, unbiased
///   normal()         Marsaglia polar method, spare deviate cached
///   gamma(a)         Marsaglia-Tsang squeeze; a < 1 via gamma(a+1)*U^(1/a)
///   beta(a, b)       X/(X+Y) with X ~ gamma(a), Y ~ gamma(b)
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    std::uint64_t uniform_index(std::uint64_t n);
    double normal();
    double gamma(double shape);
    double beta(double a, double b);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Seed of an independent substream, keyed by (master, scenario, replicate, stream).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t scenario, std::uint64_t replicate,
                          std::uint64_t stream = 0);

}  // namespace ofesim
