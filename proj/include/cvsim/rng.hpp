#ifndef CVSIM_RNG_HPP
#define CVSIM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace cvsim {

/// splitmix64 finalizer; the mixing primitive behind all seed derivation.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seeded generator with self-contained uniform/gaussian/categorical samplers,
/// so identical seeds reproduce identical trial sequences bit for bit on any
/// platform. Independent trials get independent streams via the counter-based
/// split rule in `for_trial`.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    /// Split rule: stream = splitmix64(splitmix64(master ^ mix(tag)) ^ trial).
    /// Distinct (tag, trial) pairs give statistically independent streams.
    static Rng for_trial(std::uint64_t master_seed, std::uint64_t stream_tag,
                         std::uint64_t trial_index) {
        const std::uint64_t base = splitmix64(master_seed ^ splitmix64(stream_tag));
        return Rng(splitmix64(base ^ trial_index));
    }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (pair cached).
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    /// Samples an index with probability weights[i] / sum(weights).
    std::size_t categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0 && w > -1e-12) continue;  // rounding dust
            if (w < 0.0) throw std::invalid_argument("categorical: negative weight");
            total += w;
        }
        if (total <= 0.0) throw std::invalid_argument("categorical: zero weight vector");
        const double target = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] > 0.0) acc += weights[i];
            if (target < acc) return i;
        }
        for (std::size_t i = weights.size(); i-- > 0;)
            if (weights[i] > 0.0) return i;
        return weights.size() - 1;
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cvsim

#endif
