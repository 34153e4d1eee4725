#include "dicelab/rng.hpp"

#include <cmath>

namespace dicelab {

double sample_normal(SplitMix64& rng) {
    // Box-Muller; resample u1 away from 0 so log() stays finite.
    double u1 = rng.next_double();
    while (u1 <= 0.0) u1 = rng.next_double();
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace dicelab
