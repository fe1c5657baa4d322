#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace alst {

/// Raised for every rejected input across the library. The message names the
/// offending value (row, path, class, tensor) so callers can surface it as is.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seeded random source. All stochastic choices in the library draw from one
/// of these; nothing reads ambient entropy.
///
/// Built on std::mt19937_64, whose output sequence is fixed by the standard.
/// The distribution helpers are written out here rather than using the
/// <random> distributions, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling avoids modulo bias.
  std::size_t index(std::size_t n);

  /// Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// 64-bit FNV-1a. Used for stable content digests (feature-config
/// fingerprints, model versions, derived seeds), not for security.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Lower-case hex rendering of a 64-bit digest (16 characters).
std::string to_hex(std::uint64_t value);

/// Mixes a base seed with a string tag into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace alst
