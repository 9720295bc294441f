#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace thetasim {

// SplitMix64 finalizer. Used for seed derivation only.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Per-trial seed: trials are independently seeded so aggregate results do not
/// depend on scheduling or worker partitioning.
inline std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::int64_t trial_index) {
    return splitmix64(master_seed ^ splitmix64(0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(trial_index + 1)));
}

/// Deterministic RNG for one trial. mt19937_64 output is specified bit-for-bit
/// by the standard; the floating-point draws below avoid std::*_distribution,
/// whose results are implementation-defined.
class TrialRng {
public:
    explicit TrialRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Index draw proportional to non-negative weights. A zero weight is never
    /// chosen. Caller guarantees the weights do not all vanish.
    std::size_t pick(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        const double u = uniform01() * total;
        double acc = 0.0;
        std::size_t last_positive = 0;
        bool seen_positive = false;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            if (weights[k] <= 0.0) continue;
            acc += weights[k];
            last_positive = k;
            seen_positive = true;
            if (u < acc) return k;
        }
        (void)seen_positive;
        return last_positive;  // u == total edge, land on the last positive weight
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace thetasim
