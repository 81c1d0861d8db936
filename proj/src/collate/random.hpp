#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace collate {

// Deterministic, platform-independent random source (splitmix64 core).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;  // [0, 1)
  double normal() noexcept;
  std::size_t below(std::size_t n) noexcept;

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = kFnvOffset) noexcept;

}  // namespace collate
