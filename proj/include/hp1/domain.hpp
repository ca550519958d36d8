#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace hp1 {

/// One periodic axis of the tensor grid.
struct Axis {
  int n = 1;           // cells, also spline DOFs under periodicity
  double min = 0.0;
  double length = 1.0;
  double delta = 1.0;  // cell size
  double rdelta = 1.0;
};

/// Location of a coordinate: cell index and normalized position inside it.
struct CellPos {
  std::int64_t cell = 0;
  double xi = 0.0;
};

/// Periodic tensor-product grid with domain [min, max) per axis.
class Grid3 {
 public:
  Grid3(std::array<int, 3> n_grid, std::array<double, 3> domain_min,
        std::array<double, 3> domain_max);
  /// Domain [0, length) per axis.
  Grid3(std::array<int, 3> n_grid, std::array<double, 3> lengths);

  const Axis& axis(int k) const { return axes_[static_cast<std::size_t>(k)]; }
  std::array<int, 3> n_grid() const { return {axes_[0].n, axes_[1].n, axes_[2].n}; }
  std::int64_t n_dofs() const noexcept { return n_dofs_; }

 private:
  std::array<Axis, 3> axes_;
  std::int64_t n_dofs_;
};

/// Phase-space record of one macro-particle (array-of-structures storage).
struct Particle {
  std::array<double, 3> x{};
  std::array<double, 3> v{};
  double w = 1.0;
};
static_assert(sizeof(Particle) == 7 * sizeof(double));

struct ParticleGroup {
  std::vector<Particle> particles;
  double common_weight = 1.0;
  double q = -1.0;
  double m = 1.0;

  std::int64_t n_particles() const noexcept { return static_cast<std::int64_t>(particles.size()); }
};

/// Magnetic-field spline coefficients, blocks [b1 | b2 | b3], and the
/// component-1 current accumulation vector.
struct FieldDofs {
  std::int64_t n_dofs = 0;
  std::vector<double> bfield;
  std::vector<double> j;

  explicit FieldDofs(std::int64_t n = 0)
      : n_dofs(n), bfield(static_cast<std::size_t>(3 * n), 0.0), j(static_cast<std::size_t>(n), 0.0) {}

  std::span<const double> b(int component) const {
    return {bfield.data() + component * n_dofs, static_cast<std::size_t>(n_dofs)};
  }
  std::span<double> b(int component) {
    return {bfield.data() + component * n_dofs, static_cast<std::size_t>(n_dofs)};
  }
};

/// Periodic wrap into [0, L).
double wrap_periodic(double x, double length) noexcept;

/// Wrap `x` into the axis domain and split into (cell, xi). Throws on non-finite x.
CellPos locate(double x, const Axis& axis);

/// Same as `locate` for an already-wrapped coordinate, without checks.
inline CellPos locate_wrapped(double x, const Axis& axis) noexcept {
  const double s = (x - axis.min) * axis.rdelta;
  double c = static_cast<double>(static_cast<std::int64_t>(s));
  if (c > s) c -= 1.0;
  CellPos out{static_cast<std::int64_t>(c), s - c};
  if (out.cell >= axis.n) {  // s rounded up to n
    out.cell = axis.n - 1;
    out.xi = 0x1.fffffffffffffp-1;
  }
  return out;
}

inline std::int64_t wrap_index(std::int64_t i, std::int64_t n) noexcept {
  const std::int64_t r = i % n;
  return r < 0 ? r + n : r;
}

/// Flat DOF index, i1 fastest, each component wrapped periodically.
std::int64_t tensor_index_1d(std::int64_t i1, std::int64_t i2, std::int64_t i3, const Grid3& grid);

}  // namespace hp1
