#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace vsynth {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic random source. std::mt19937_64 has a standard-mandated bit
/// stream; the distribution helpers below are hand-rolled because the
/// std::*_distribution classes are implementation-defined and would break
/// byte-identical reruns across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Unbiased via masked rejection.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n <= 1) return 0;
        const int bits = 64 - __builtin_clzll(n - 1);
        const std::uint64_t mask = (bits >= 64) ? ~0ULL : ((1ULL << bits) - 1ULL);
        std::uint64_t x;
        do {
            x = gen_() & mask;
        } while (x >= n);
        return x;
    }

    /// Standard normal via Box-Muller. The spare sample is cached, so draws
    /// come in deterministic pairs.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        has_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

    void fill_normal(std::vector<double>& out) {
        for (double& v : out) v = normal();
    }

    /// Independent stream derived from the base seed. Stable regardless of
    /// how much state this generator has already consumed.
    Rng substream(std::uint64_t index) const {
        return Rng(splitmix64(splitmix64(seed_) ^ (index + 0x1234567ULL)));
    }

    /// Fisher-Yates; std::shuffle is implementation-defined.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace vsynth
