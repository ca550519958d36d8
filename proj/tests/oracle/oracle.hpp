#pragma once

// Reference implementations used only by the tests. Nothing here shares code
// with the library's spline evaluation or integration paths.

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace oracle {

/// Uniform B-spline of `degree` with support [0, degree+1), textbook recursion.
double cox_de_boor(int degree, double x);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int n);

/// Integral over [a, b] of cox_de_boor(degree, x - basis_offset), by adaptive
/// composite Gauss-Legendre (split at knots, bisect until 1e-13 absolute).
double quadrature_integrate(int degree, double a, double b, std::int64_t basis_offset);

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);

struct Deposit {
  std::int64_t index;
  double value;
};
/// Replay a deposit trace with a compensated sum per slot.
std::vector<double> replay_compensated(std::int64_t n_dofs, std::span<const Deposit> trace);

/// Minimal description of the periodic grid, independent of hp1::Grid3.
struct GridDesc {
  std::array<int, 3> n{};
  std::array<double, 3> min{};
  std::array<double, 3> delta{};
  std::int64_t flat(std::int64_t i1, std::int64_t i2, std::int64_t i3) const;
  std::int64_t n_dofs() const { return static_cast<std::int64_t>(n[0]) * n[1] * n[2]; }
};

struct PushReference {
  double v2 = 0.0;
  double v3 = 0.0;
  std::vector<double> j;
};

/// H_p1 update of one particle by direct quadrature of the time integrals
/// along the straight x1 trajectory: the path is split at cell boundaries and
/// each piece is integrated with a 64-point Gauss rule.
PushReference hp1_reference(const GridDesc& grid, int degree, std::array<double, 3> x,
                            std::array<double, 3> v, double w, double dt, double q, double m,
                            double common_weight, std::span<const double> bfield);

}  // namespace oracle
