#pragma once

// Counter-based per-path random streams. Every draw sequence is a pure
// function of (master_seed, path_index), so ensembles are reproducible
// regardless of how paths are scheduled across workers.

#include <cmath>
#include <cstdint>

namespace stickysim {

struct NoiseStream {
    std::uint64_t master_seed = 0;
    std::uint64_t path_index = 0;
};

namespace detail {
inline std::uint64_t sm64_finalize(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}
} // namespace detail

// splitmix64 stream seeded by hashing (master_seed, path_index).
class Rng {
public:
    explicit Rng(NoiseStream ns) {
        const std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
        std::uint64_t a = detail::sm64_finalize(ns.master_seed + golden);
        std::uint64_t b = detail::sm64_finalize(ns.path_index * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL);
        state_ = detail::sm64_finalize(a ^ (b + golden + (a << 6) + (a >> 2)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        ++counter_;
        return detail::sm64_finalize(state_);
    }

    // uniform on [0,1) with 53 random bits
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // standard normal via the polar method; second variate cached
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        cached_ = v * f;
        has_cached_ = true;
        return u * f;
    }

    std::uint64_t draws() const { return counter_; }

private:
    std::uint64_t state_ = 0;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace stickysim
