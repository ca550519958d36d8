#include "hp1/domain.hpp"

#include <cmath>
#include <string>

#include "hp1/errors.hpp"

namespace hp1 {

Grid3::Grid3(std::array<int, 3> n_grid, std::array<double, 3> domain_min,
             std::array<double, 3> domain_max) {
  n_dofs_ = 1;
  for (std::size_t k = 0; k < 3; ++k) {
    if (n_grid[k] < 1) throw_invalid("grid needs at least one cell per axis");
    if (!std::isfinite(domain_min[k]) || !std::isfinite(domain_max[k]) ||
        !(domain_max[k] > domain_min[k])) {
      throw_invalid("axis " + std::to_string(k) + " has an empty or non-finite domain");
    }
    Axis& a = axes_[k];
    a.n = n_grid[k];
    a.min = domain_min[k];
    a.length = domain_max[k] - domain_min[k];
    a.delta = a.length / a.n;
    a.rdelta = a.n / a.length;
    n_dofs_ *= a.n;
  }
}

Grid3::Grid3(std::array<int, 3> n_grid, std::array<double, 3> lengths)
    : Grid3(n_grid, {0.0, 0.0, 0.0}, lengths) {}

double wrap_periodic(double x, double length) noexcept {
  double r = std::fmod(x, length);
  if (r < 0.0) r += length;
  // r + length can round up to length for tiny negative r
  if (r >= length) r -= length;
  return r;
}

CellPos locate(double x, const Axis& axis) {
  if (!std::isfinite(x)) throw_invalid("cannot locate a non-finite coordinate");
  const double wrapped = axis.min + wrap_periodic(x - axis.min, axis.length);
  return locate_wrapped(wrapped, axis);
}

std::int64_t tensor_index_1d(std::int64_t i1, std::int64_t i2, std::int64_t i3, const Grid3& grid) {
  const std::int64_t n1 = grid.axis(0).n;
  const std::int64_t n2 = grid.axis(1).n;
  const std::int64_t n3 = grid.axis(2).n;
  return wrap_index(i1, n1) + n1 * (wrap_index(i2, n2) + n2 * wrap_index(i3, n3));
}

}  // namespace hp1
