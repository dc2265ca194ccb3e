#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace climashift {

/// FNV-1a 64-bit over raw bytes. Used both for label hashing and as the
/// dataset file checksum.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  void update(const void* data, std::size_t size) noexcept;
  std::uint64_t digest() const noexcept { return hash_; }

 private:
  std::uint64_t hash_ = kOffset;
};

std::uint64_t fnv1a64(std::string_view text) noexcept;

/// SplitMix64 output function applied to a single 64-bit word.
std::uint64_t splitmix64_mix(std::uint64_t x) noexcept;

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}
  std::uint64_t next() noexcept;

 private:
  std::uint64_t state_;
};

/// Sub-seed for a labelled stream: s <- mix(s ^ fnv1a64(label)) for each label.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::string_view> labels) noexcept;

/// PCG32 (XSH-RR, 64-bit state), O'Neill's reference seeding.
class Pcg32 {
 public:
  static constexpr std::uint64_t kDefaultStream = 0xda3e39cb94b95bdbULL;

  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = kDefaultStream) noexcept;

  std::uint32_t next() noexcept;
  /// Unbiased integer in [0, bound) by rejection. bound must be > 0.
  std::uint32_t bounded(std::uint32_t bound) noexcept;
  /// 53-bit uniform in [0, 1) from two draws.
  double uniform() noexcept;

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
};

/// Box-Muller standard normals over a Pcg32 stream. Each uniform pair yields
/// two normals; the second is cached and returned by the next call.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) noexcept : rng_(seed) {}
  double next() noexcept;

 private:
  Pcg32 rng_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace climashift
