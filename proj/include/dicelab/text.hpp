#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace dicelab {

/// Shortest decimal string that round-trips the double (std::to_chars).
std::string format_double(double v);

/// FNV-1a 64 over the IEEE-754 bytes of the values, little-endian byte order.
/// Used to fingerprint policy tables for dataset provenance.
std::uint64_t fnv1a64(std::span<const double> values);

std::string to_hex(std::uint64_t v);

}  // namespace dicelab
