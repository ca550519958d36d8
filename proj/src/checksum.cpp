#include "hp1/init_state.hpp"

namespace hp1 {

std::uint64_t checksum_bytes(std::span<const std::byte> bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t checksum(std::span<const double> values) noexcept {
  return checksum_bytes(std::as_bytes(values));
}

std::uint64_t checksum(std::span<const Particle> particles) noexcept {
  return checksum_bytes(std::as_bytes(particles));
}

}  // namespace hp1
