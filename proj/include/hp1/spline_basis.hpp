#pragma once

#include <span>
#include <vector>

namespace hp1 {

inline constexpr int kMaxSplineDegree = 12;

/// Uniform B-spline of degree q in piecewise-polynomial form on a reference cell.
///
/// Basis ordering: on a cell, the q+1 nonzero basis functions are numbered
/// r = 0..q, with r = 0 the function whose support starts furthest left.
/// For a particle in cell c this is the function with global index c - q + r
/// (a function with index i covers cells i..i+q).
///
/// All values are in cell units; physical cell sizes are applied by callers.
class PPSplineBasis {
 public:
  explicit PPSplineBasis(int degree);

  int degree() const noexcept { return degree_; }
  int n_basis() const noexcept { return degree_ + 1; }

  /// Row r of the pp-form, highest power first.
  std::span<const double> basis_coeffs(int r) const;
  /// Row r of the primitive pp-form (degree q+1, highest power first),
  /// including the integral over the pieces left of the cell.
  std::span<const double> primitive_coeffs(int r) const;

  /// Horner evaluation of all q+1 basis values. No range check on xi.
  void eval_basis_into(double xi, std::span<double> out) const noexcept;

  /// out[0] = 1 (function c-q-1, fully traversed), out[1+r] = primitive of row r.
  void eval_primitive_into(double xi, std::span<double> out) const noexcept;

  /// Integral of every basis row over [a, a+len] inside one cell (len >= 0).
  /// The primitive difference is evaluated in divided-difference form, so
  /// short segments keep full relative accuracy. `work` needs q+1 slots.
  void integrate_segment_into(double a, double len, std::span<double> out,
                              std::span<double> work) const noexcept;

  /// Integral of basis row r over the whole cell.
  std::span<const double> full_cell_integrals() const noexcept { return full_cell_; }

 private:
  int degree_;
  std::vector<double> basis_;      // (q+1) x (q+1)
  std::vector<double> primitive_;  // (q+1) x (q+2)
  std::vector<double> segment_;    // (q+1) x (q+1), local primitive coeffs of xi^1..xi^(q+1)
  std::vector<double> full_cell_;  // q+1
};

/// Build the pp-form of the uniform B-spline of `degree` and of its primitive.
PPSplineBasis pp_coefficients(int degree);

std::vector<double> eval_basis(const PPSplineBasis& basis, double xi);
std::vector<double> eval_primitive(const PPSplineBasis& basis, double xi);

}  // namespace hp1
