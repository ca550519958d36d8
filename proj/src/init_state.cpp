#include "hp1/init_state.hpp"

#include <cmath>

#include "hp1/errors.hpp"
#include "hp1/spline_basis.hpp"

namespace hp1 {

namespace {
// Stream keys for the independent draws.
constexpr std::uint64_t kParticleStream = 0x243f6a8885a308d3ULL;
constexpr std::uint64_t kFieldStream = 0x13198a2e03707344ULL;
}  // namespace

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double counter_uniform(std::uint64_t key, std::uint64_t counter) noexcept {
  const std::uint64_t bits = splitmix64(splitmix64(key) ^ counter);
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double crossing_v_scale(const InitSpec& spec, double dt, double cells) {
  if (!(dt > 0.0)) throw_invalid("time step must be positive");
  return cells * spec.lengths[0] / spec.n_grid[0] / dt;
}

SimState init(const InitSpec& spec) {
  if (spec.n_particles <= 0) throw_invalid("n_particles must be positive");
  if (spec.degree < 1 || spec.degree > kMaxSplineDegree) throw_invalid("degree out of range");
  if (!std::isfinite(spec.v_scale) || spec.v_scale < 0.0) throw_invalid("v_scale must be finite and >= 0");
  if (!std::isfinite(spec.q) || !std::isfinite(spec.m) || spec.m == 0.0 ||
      !std::isfinite(spec.common_weight)) {
    throw_invalid("species parameters must be finite with nonzero mass");
  }

  SimState st{Grid3(spec.n_grid, spec.lengths), ParticleGroup{}, FieldDofs{}};
  st.group.q = spec.q;
  st.group.m = spec.m;
  st.group.common_weight = spec.common_weight;
  st.group.particles.resize(static_cast<std::size_t>(spec.n_particles));

  const std::uint64_t pkey = spec.seed ^ kParticleStream;
  for (std::int64_t i = 0; i < spec.n_particles; ++i) {
    Particle& p = st.group.particles[static_cast<std::size_t>(i)];
    const auto base = static_cast<std::uint64_t>(i) * 6;
    for (int k = 0; k < 3; ++k) {
      const Axis& ax = st.grid.axis(k);
      const double u = counter_uniform(pkey, base + static_cast<std::uint64_t>(k));
      p.x[static_cast<std::size_t>(k)] = ax.min + wrap_periodic(u * ax.length, ax.length);
      const double uv = counter_uniform(pkey, base + 3 + static_cast<std::uint64_t>(k));
      p.v[static_cast<std::size_t>(k)] = spec.v_scale * (2.0 * uv - 1.0);
    }
    p.w = 1.0;
  }

  st.fields = FieldDofs(st.grid.n_dofs());
  const std::uint64_t fkey = spec.seed ^ kFieldStream;
  for (std::size_t i = 0; i < st.fields.bfield.size(); ++i) {
    st.fields.bfield[i] = 2.0 * counter_uniform(fkey, i) - 1.0;
  }
  return st;
}

}  // namespace hp1
