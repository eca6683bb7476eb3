#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>

namespace flexconn {

/// mt19937 stream with hand-rolled scalar draws so a fixed seed produces the
/// same sequence on every platform (std distributions are implementation
/// defined). All seeded behavior in the library goes through this class.
class Rng {
public:
    explicit Rng(std::uint64_t seed)
        : gen_(static_cast<std::mt19937::result_type>(seed ^ (seed >> 32))) {}

    std::uint32_t next_u32() { return gen_(); }

    // uniform in [0, 1) with 24 mantissa bits, exactly representable in float
    double uniform() { return (gen_() >> 8) * (1.0 / 16777216.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // index in [0, n)
    std::size_t index(std::size_t n) {
        // rejection sampling kills the modulo bias
        const std::uint32_t limit = 0xffffffffu - (0xffffffffu % static_cast<std::uint32_t>(n));
        std::uint32_t r;
        do {
            r = gen_();
        } while (r >= limit && n > 1);
        return static_cast<std::size_t>(r % n);
    }

    // standard normal via Box-Muller
    double normal() {
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    template <typename Vec>
    void shuffle(Vec& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937 gen_;
};

// splitmix64, used to derive independent per-case seeds from one root seed
inline std::uint64_t mix_seed(std::uint64_t root, std::uint64_t salt) {
    std::uint64_t z = root + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace flexconn
