#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

namespace maxstable {

/// splitmix64 finalizer; used to derive well-separated substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the substream identified by (seed, k1, k2, ...). Every simulated
/// field, replicate and multistart draws from its own substream so results
/// do not depend on evaluation order or thread count.
inline std::uint64_t substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = mix64(seed);
    for (auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
    return h;
}

/// Random source whose streams do not depend on the standard library: the
/// uniform transforms are written out and the normal and exponential draws use
/// Boost's ziggurat samplers, which are fixed across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1).
    double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential() { return exponential_(engine_); }

    /// Unit Frechet: P(X <= x) = exp(-1/x).
    double unit_frechet() { return 1.0 / exponential(); }

    double normal() { return normal_(engine_); }

    std::uint64_t next() { return engine_(); }

private:
    boost::random::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;
    boost::random::exponential_distribution<double> exponential_;
};

}  // namespace maxstable
