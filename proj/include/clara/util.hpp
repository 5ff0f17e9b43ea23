#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace clara {

// FNV-1a 64-bit. This is the project's stable hash: prompt fingerprints,
// embedder token bucketing and response fingerprints all use it, so fixtures
// can be authored (and re-derived) outside this codebase.
inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

/// Lowercase 16-digit hex, zero padded.
std::string to_hex16(std::uint64_t value);

/// Round to one decimal, ties away from zero (report formatting convention).
double round1(double value);

/// Render with exactly one decimal digit ("55.0", "-11.6").
std::string format1(double value);

std::string ascii_lower(std::string_view text);
std::string_view trim(std::string_view text);

/// Whole file as bytes. Throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Overwrites. Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Splits on '\n' (final trailing newline yields no empty last entry).
std::vector<std::string> split_lines(std::string_view text);

}  // namespace clara
