#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace supervisim {

/// splitmix64 finaliser; used to decorrelate seed material.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stream id for (run index, purpose label). Distinct labels never share a
/// stream, so adding a source does not perturb another source's draws.
constexpr std::uint64_t stream_id(std::uint64_t run_index, std::string_view label) noexcept {
  return mix64(mix64(run_index) ^ fnv1a(label));
}

/// A seeded generator bound to (master_seed, stream id).
class RngStream {
 public:
  using engine_type = std::mt19937_64;
  using result_type = engine_type::result_type;

  RngStream(std::uint64_t master_seed, std::uint64_t id)
      : master_seed_(master_seed), id_(id), engine_(mix64(master_seed ^ mix64(id))) {}

  RngStream(std::uint64_t master_seed, std::uint64_t run_index, std::string_view label)
      : RngStream(master_seed, stream_id(run_index, label)) {}

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t id() const noexcept { return id_; }

  static constexpr result_type min() { return engine_type::min(); }
  static constexpr result_type max() { return engine_type::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; suitable for inverse-CDF sampling of 1/U-type laws.
  double uniform_open_zero() { return 1.0 - uniform(); }

 private:
  std::uint64_t master_seed_;
  std::uint64_t id_;
  engine_type engine_;
};

}  // namespace supervisim
