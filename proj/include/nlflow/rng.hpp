// Counter-based random numbers: every draw is a pure function of
// (seed, stream, counter), so results do not depend on call order or threads.
#pragma once

#include <cmath>
#include <cstdint>

namespace nlflow {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::uint64_t bits(std::uint64_t counter) const {
        return splitmix64(splitmix64(splitmix64(seed_) ^ stream_) ^ counter);
    }
    /// Uniform in [0, 1).
    double uniform(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }
    double uniform(std::uint64_t counter, double lo, double hi) const {
        return lo + (hi - lo) * uniform(counter);
    }
    /// Standard normal via Box-Muller on two consecutive counters.
    double normal(std::uint64_t counter) const {
        const double u1 = 1.0 - uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

} // namespace nlflow
