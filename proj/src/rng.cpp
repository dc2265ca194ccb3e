#include "climashift/rng.hpp"

#include <cmath>
#include <numbers>

namespace climashift {

void Fnv1a64::update(const void* data, std::size_t size) noexcept {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = hash_;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= kPrime;
  }
  hash_ = h;
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  Fnv1a64 h;
  h.update(text.data(), text.size());
  return h.digest();
}

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t SplitMix64::next() noexcept {
  const std::uint64_t out = splitmix64_mix(state_);
  state_ += 0x9e3779b97f4a7c15ULL;
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::string_view> labels) noexcept {
  std::uint64_t s = seed;
  for (std::string_view label : labels) s = splitmix64_mix(s ^ fnv1a64(label));
  return s;
}

Pcg32::Pcg32(std::uint64_t seed, std::uint64_t stream) noexcept {
  state_ = 0;
  inc_ = (stream << 1u) | 1u;
  next();
  state_ += seed;
  next();
}

std::uint32_t Pcg32::next() noexcept {
  const std::uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  const auto rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
}

std::uint32_t Pcg32::bounded(std::uint32_t bound) noexcept {
  const std::uint32_t threshold = (0u - bound) % bound;
  for (;;) {
    const std::uint32_t r = next();
    if (r >= threshold) return r % bound;
  }
}

double Pcg32::uniform() noexcept {
  const std::uint64_t a = next() >> 5;  // 27 bits
  const std::uint64_t b = next() >> 6;  // 26 bits
  return static_cast<double>(a * 67108864ULL + b) * (1.0 / 9007199254740992.0);
}

double NormalSampler::next() noexcept {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = 1.0 - rng_.uniform();  // (0, 1]
  const double u2 = rng_.uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

}  // namespace climashift
