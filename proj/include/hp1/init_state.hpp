#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <span>

#include "hp1/domain.hpp"

namespace hp1 {

struct InitSpec {
  std::uint64_t seed = 1;
  std::int64_t n_particles = 1000;
  std::array<int, 3> n_grid{16, 8, 8};
  std::array<double, 3> lengths{4 * std::numbers::pi, 4 * std::numbers::pi, 4 * std::numbers::pi};
  int degree = 3;
  /// Velocities are uniform in [-v_scale, v_scale]^3.
  double v_scale = 1.0;
  double q = -1.0;
  double m = 1.0;
  double common_weight = 1.0;
};

/// v_scale whose largest x1 displacement in one step of `dt` is `cells` cells.
double crossing_v_scale(const InitSpec& spec, double dt, double cells);

struct SimState {
  Grid3 grid;
  ParticleGroup group;
  FieldDofs fields;
};

/// Seeded, platform-independent construction of particles and b coefficients.
/// Positions uniform in the domain, velocities uniform in [-v_scale, v_scale]^3,
/// weights 1, b uniform in [-1, 1].
SimState init(const InitSpec& spec);

/// Counter-based generator: uniform double in [0, 1) from (key, counter), via
/// the splitmix64 finalizer. Pure function, no state.
double counter_uniform(std::uint64_t key, std::uint64_t counter) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// FNV-1a 64 over the raw bytes, in order.
std::uint64_t checksum_bytes(std::span<const std::byte> bytes) noexcept;
std::uint64_t checksum(std::span<const double> values) noexcept;
std::uint64_t checksum(std::span<const Particle> particles) noexcept;

}  // namespace hp1
