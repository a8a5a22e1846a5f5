#pragma once

#include <cmath>
#include <cstdint>

namespace tsim {

/// Deterministic random stream based on splitmix64. All randomness in the
/// library flows through this generator so that results are reproducible
/// bit-for-bit for a given seed, independent of platform or standard library.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, bound) without modulo bias (rejection sampling).
    uint64_t below(uint64_t bound) {
        const uint64_t threshold = (-bound) % bound;
        uint64_t r;
        do {
            r = next_u64();
        } while (r < threshold);
        return r % bound;
    }

    /// Standard normal draw via Box-Muller (explicit, not std::normal_distribution,
    /// so that streams are identical across standard library implementations).
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log1p(-u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        cached_ = radius * std::sin(angle);
        have_cached_ = true;
        return radius * std::cos(angle);
    }

private:
    uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

/// Stream tags keep per-purpose substreams disjoint. Trial seeds are derived
/// from (master seed, tag, indices) so parallel trials reproduce the same
/// numbers regardless of scheduling or batch splits.
enum class StreamTag : uint64_t {
    InfoBits = 1,
    Channel = 2,
    Interleaver = 3,
    TrainingObservation = 4,
    RingDeployment = 5,
    VarianceMismatch = 6,
    PsiCalibration = 7,
    ChainSimulation = 8,
};

namespace detail {
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}
} // namespace detail

inline uint64_t derive_seed(uint64_t master, StreamTag tag, uint64_t a = 0, uint64_t b = 0) {
    uint64_t h = detail::mix64(master ^ 0x6a09e667f3bcc908ull);
    h = detail::mix64(h ^ static_cast<uint64_t>(tag));
    h = detail::mix64(h ^ a);
    h = detail::mix64(h ^ b);
    return h;
}

} // namespace tsim
