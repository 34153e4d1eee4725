#pragma once

#include <cstdint>
#include <span>

namespace dicelab {

/// SplitMix64 (Steele, Lea & Flood 2014). Chosen over std::mt19937 because
/// the full output sequence, including the double conversion below, is pinned
/// here and therefore identical on every platform. State advances by the
/// golden-ratio increment; outputs are the finalized mix of the state.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Seed for sub-stream `index` of run `seed`: the SplitMix64 output at counter
/// position index+1 of the stream starting at `seed`. Distinct indices give
/// independent-looking sub-generators without sharing state.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Sample an index from an (unnormalized up to rounding) probability vector by
/// a cumulative walk. u must be in [0, 1). Falls back to the last positive
/// entry if rounding pushes the cumulative sum below u.
inline int sample_categorical(std::span<const double> probs, double u) {
    double cum = 0.0;
    int last_positive = -1;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
        if (probs[i] > 0.0) last_positive = i;
        cum += probs[i];
        if (u < cum) return i;
    }
    return last_positive;
}

/// Standard normal via Box-Muller on SplitMix64 doubles (deterministic).
double sample_normal(SplitMix64& rng);

}  // namespace dicelab
