#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flexcoord {

// Derives an independent RNG seed for a named stream from a master seed.
// splitmix64 over (seed ^ fnv1a(stream)) so that streams never collide by
// accident when the master seed is incremented.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view stream) {
    return std::mt19937_64(derive_seed(master, stream));
}

// 64-bit FNV-1a over the raw bytes of a double sequence.
std::uint64_t hash_doubles(const std::vector<double>& values);

// Locale-independent, round-trip-exact double formatting (std::to_chars).
std::string format_double(double value);

// Locale-independent parse; returns nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view text);

std::vector<std::string> split_csv_line(std::string_view line);

} // namespace flexcoord
