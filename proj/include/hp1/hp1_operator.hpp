#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hp1/domain.hpp"
#include "hp1/exec.hpp"
#include "hp1/scatter.hpp"
#include "hp1/spline_basis.hpp"

namespace hp1 {

/// Integral of the degree-(p-1) basis along x1 over one particle trajectory.
struct LineIntegral {
  std::int64_t first_dof = 0;  // unwrapped index of values[0]
  std::vector<double> values;  // cell units, signed
};

/// Integrals of every basis function of `basis` touched by the segment from
/// (cell_old, xi_old) to (cell_new, xi_new), cell units. Entries are signed:
/// negative when the new position is left of the old one.
/// Throws Errc::StepTooLarge when |cell_new - cell_old| > max_crossing.
LineIntegral integrated_basis_line(const PPSplineBasis& basis, std::int64_t cell_old,
                                   double xi_old, std::int64_t cell_new, double xi_new,
                                   std::int64_t max_crossing);

/// Hot-path form. `delta` is the signed displacement in cells and is the
/// quantity the entries sum to; cell_new is the cell holding the end point.
/// Writes |cell_new - cell_old| + degree + 1 entries into `out` and returns that count.
/// `work` needs 2 * (degree + 1) slots. No crossing check.
std::int64_t integrate_line_into(const PPSplineBasis& basis, std::int64_t cell_old, double xi_old,
                                 std::int64_t cell_new, double delta, std::span<double> out,
                                 std::span<double> work) noexcept;

/// Per-worker workspace of one particle push; views into the worker's scratch block.
struct ParticleScratch {
  std::span<double> spline_p;       // 3 x (p+1)
  std::span<double> spline_pm1;     // 3 x p
  std::span<double> j1d;            // max_crossing + p
  std::span<double> work;           // 2p
  std::span<std::int64_t> index_x;  // max_crossing + p
  std::span<std::int64_t> startjk;  // (p+1) x (p+1)
};

struct StepTiming {
  double compute_seconds = 0.0;
  double contribute_seconds = 0.0;
};

/// The H_p1 substep: x1 advected by v1, v2/v3 rotated by the trajectory
/// integrals of b3/b2, and the x1 current deposited into j.
class Hp1Operator {
 public:
  /// `degree` is the spline degree p of the magnetic field basis (p >= 1).
  /// max_crossing defaults to n_grid[0] - 1.
  Hp1Operator(const Grid3& grid, int degree, std::optional<std::int64_t> max_crossing = {});
  ~Hp1Operator();
  Hp1Operator(Hp1Operator&&) noexcept;
  Hp1Operator& operator=(Hp1Operator&&) noexcept;

  const Grid3& grid() const noexcept { return grid_; }
  int degree() const noexcept { return degree_; }
  std::int64_t max_crossing() const noexcept { return max_crossing_; }
  const PPSplineBasis& basis_p() const noexcept { return basis_p_; }
  const PPSplineBasis& basis_pm1() const noexcept { return basis_pm1_; }

  std::vector<std::size_t> scratch_fields() const;
  std::size_t scratch_slots() const;
  ParticleScratch bind(const WorkerScratch& scratch) const noexcept;

  /// Push one particle. `marker_factor` is q * common_weight (the particle
  /// weight is applied inside), bfield is [b1 | b2 | b3].
  void push_particle(Particle& particle, double dt, double qoverm, double marker_factor,
                     std::span<const double> bfield, ScatterAccess acc,
                     const ParticleScratch& scratch) const;

  /// Convenience form with its own scratch, depositing directly into `j`.
  void push_particle(Particle& particle, double dt, const ParticleGroup& species,
                     std::span<const double> bfield, std::span<double> j) const;

  /// Push every particle of `group`; fields.j is zeroed and then holds the
  /// reduced current. Errors carry the offending particle index.
  StepTiming step(ParticleGroup& group, FieldDofs& fields, double dt, const ExecConfig& exec);

 private:
  template <bool Atomic>
  void push_impl(Particle& particle, double dt, double qoverm, double marker_factor,
                 std::span<const double> bfield, ScatterAccess acc,
                 const ParticleScratch& s) const;

  Grid3 grid_;
  int degree_;
  std::int64_t max_crossing_;
  PPSplineBasis basis_p_;
  PPSplineBasis basis_pm1_;

  // Resources kept between steps; rebuilt when the execution config changes.
  std::unique_ptr<ScatterAccumulator> accumulator_;
  std::size_t accumulator_line_ = 0;
  std::unique_ptr<ScratchArena> arena_;
};

/// Free-function form of Hp1Operator::step.
inline StepTiming hp1_step(Hp1Operator& op, ParticleGroup& group, FieldDofs& fields, double dt,
                           const ExecConfig& exec) {
  return op.step(group, fields, dt, exec);
}

}  // namespace hp1
