#include "lageb/rng.hpp"

namespace lageb {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t n, std::uint64_t rep) {
    std::uint64_t h = mix64(master_seed);
    h = mix64(h ^ mix64(n ^ 0x6a09e667f3bcc908ULL));
    h = mix64(h ^ mix64(rep ^ 0xbb67ae8584caa73bULL));
    return h;
}

Stream Stream::derive(std::uint64_t master_seed, std::uint64_t n, std::uint64_t rep) {
    return Stream(stream_seed(master_seed, n, rep));
}

double Stream::uniform_open() {
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Stream::gamma(double shape, double rate) {
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(engine_);
}

} // namespace lageb
