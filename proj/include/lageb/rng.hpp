#pragma once

#include <cstdint>
#include <random>

namespace lageb {

/// Random stream owned by one replication. Streams are derived from a
/// (master seed, sample size, replication index) key, so any replication can be
/// regenerated in isolation and in any order.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    static Stream derive(std::uint64_t master_seed, std::uint64_t n, std::uint64_t rep);

    /// Uniform draw on the open interval (0, 1) with 53 random bits.
    double uniform_open();

    /// Gamma(shape, rate) draw.
    double gamma(double shape, double rate);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Key-to-seed map used by Stream::derive (SplitMix64 finalizer chain).
std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t n, std::uint64_t rep);

} // namespace lageb
