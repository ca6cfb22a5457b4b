#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace stancecred {

/// 64-bit FNV-1a. Used for config hashes and asset fingerprints,
/// never for anything security-sensitive.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string to_hex(std::uint64_t value);

/// FNV-1a over a file's bytes; throws IoError if the file cannot be read.
std::uint64_t fingerprint_file(const std::string& path);

/// Deterministic RNG wrapper. std::shuffle / std::uniform_int_distribution
/// are implementation-defined, so splits and folds roll their own sampling
/// to keep results identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound) by rejection sampling.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1).
  double next_double();

  /// Fisher-Yates with our own bounded sampling.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace stancecred
