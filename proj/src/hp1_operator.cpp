#include "hp1/hp1_operator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "hp1/errors.hpp"

namespace hp1 {

namespace {

void check_crossing(std::int64_t cells, std::int64_t max_crossing) {
  if (cells > max_crossing) {
    throw Error(Errc::StepTooLarge, "trajectory crosses " + std::to_string(cells) +
                                        " cells, limit is " + std::to_string(max_crossing));
  }
}

}  // namespace

std::int64_t integrate_line_into(const PPSplineBasis& basis, std::int64_t cell_old, double xi_old,
                                 std::int64_t cell_new, double delta, std::span<double> out,
                                 std::span<double> work) noexcept {
  const int nb = basis.n_basis();
  const std::span<double> seg = work.first(static_cast<std::size_t>(nb));
  const std::span<double> h = work.subspan(static_cast<std::size_t>(nb), static_cast<std::size_t>(nb));
  const std::span<const double> full = basis.full_cell_integrals();
  const bool backward = delta < 0.0;
  const double dist = backward ? -delta : delta;
  const std::int64_t m = backward ? cell_old - cell_new : cell_new - cell_old;
  const std::int64_t local = m + nb;
  std::fill_n(out.begin(), local, 0.0);

  auto add_segment = [&](std::int64_t t, double a, double len) {
    basis.integrate_segment_into(a, len, seg, h);
    for (int r = 0; r < nb; ++r) out[static_cast<std::size_t>(t + r)] += seg[static_cast<std::size_t>(r)];
  };
  auto add_full = [&](std::int64_t t) {
    for (int r = 0; r < nb; ++r) out[static_cast<std::size_t>(t + r)] += full[static_cast<std::size_t>(r)];
  };

  // Cells are visited from the leftmost (t = 0) to the rightmost (t = m). The
  // partial segment at the far end takes the remaining length so that the
  // entries sum to `dist` up to rounding of the segment integrals.
  if (m == 0) {
    add_segment(0, backward ? xi_old - dist : xi_old, dist);
  } else if (!backward) {
    add_segment(0, xi_old, 1.0 - xi_old);
    for (std::int64_t t = 1; t < m; ++t) add_full(t);
    add_segment(m, 0.0, dist - (1.0 - xi_old) - static_cast<double>(m - 1));
  } else {
    const double len = dist - xi_old - static_cast<double>(m - 1);
    add_segment(0, 1.0 - len, len);
    for (std::int64_t t = 1; t < m; ++t) add_full(t);
    add_segment(m, 0.0, xi_old);
  }
  if (backward) {
    for (std::int64_t i = 0; i < local; ++i) out[static_cast<std::size_t>(i)] = -out[static_cast<std::size_t>(i)];
  }
  return local;
}

LineIntegral integrated_basis_line(const PPSplineBasis& basis, std::int64_t cell_old,
                                   double xi_old, std::int64_t cell_new, double xi_new,
                                   std::int64_t max_crossing) {
  if (!(xi_old >= 0.0 && xi_old < 1.0) || !(xi_new >= 0.0 && xi_new < 1.0)) {
    throw_invalid("normalized cell position outside [0, 1)");
  }
  const std::int64_t m = cell_new > cell_old ? cell_new - cell_old : cell_old - cell_new;
  check_crossing(m, max_crossing);
  const double delta = static_cast<double>(cell_new - cell_old) + (xi_new - xi_old);
  LineIntegral li;
  li.first_dof = std::min(cell_old, cell_new) - basis.degree();
  li.values.resize(static_cast<std::size_t>(m + basis.n_basis()));
  std::vector<double> work(static_cast<std::size_t>(2 * basis.n_basis()));
  integrate_line_into(basis, cell_old, xi_old, cell_new, delta, li.values, work);
  return li;
}

Hp1Operator::Hp1Operator(const Grid3& grid, int degree, std::optional<std::int64_t> max_crossing)
    : grid_(grid),
      degree_(degree),
      max_crossing_(max_crossing.value_or(grid.axis(0).n - 1)),
      basis_p_(degree >= 1 ? degree : 1),
      basis_pm1_(degree >= 1 ? degree - 1 : 0) {
  if (degree < 1 || degree > kMaxSplineDegree) {
    throw_invalid("operator spline degree must be in [1, " + std::to_string(kMaxSplineDegree) + "]");
  }
  if (max_crossing_ < 0) throw_invalid("maximum cell crossing must be non-negative");
}

Hp1Operator::~Hp1Operator() = default;
Hp1Operator::Hp1Operator(Hp1Operator&&) noexcept = default;
Hp1Operator& Hp1Operator::operator=(Hp1Operator&&) noexcept = default;

std::vector<std::size_t> Hp1Operator::scratch_fields() const {
  const auto p = static_cast<std::size_t>(degree_);
  const auto line = static_cast<std::size_t>(max_crossing_) + p;
  return {3 * (p + 1), 3 * p, line, 2 * p, line, (p + 1) * (p + 1)};
}

std::size_t Hp1Operator::scratch_slots() const {
  std::size_t n = 0;
  for (std::size_t s : scratch_fields()) n += s;
  return n;
}

ParticleScratch Hp1Operator::bind(const WorkerScratch& s) const noexcept {
  return {s.field<double>(0),       s.field<double>(1),       s.field<double>(2),
          s.field<double>(3),       s.field<std::int64_t>(4), s.field<std::int64_t>(5)};
}

void Hp1Operator::push_particle(Particle& particle, double dt, double qoverm, double marker_factor,
                                std::span<const double> bfield, ScatterAccess acc,
                                const ParticleScratch& scratch) const {
  if (acc.atomic) {
    push_impl<true>(particle, dt, qoverm, marker_factor, bfield, acc, scratch);
  } else {
    push_impl<false>(particle, dt, qoverm, marker_factor, bfield, acc, scratch);
  }
}

void Hp1Operator::push_particle(Particle& particle, double dt, const ParticleGroup& species,
                                std::span<const double> bfield, std::span<double> j) const {
  if (static_cast<std::int64_t>(j.size()) != grid_.n_dofs() ||
      static_cast<std::int64_t>(bfield.size()) != 3 * grid_.n_dofs()) {
    throw_invalid("field vectors do not match the grid");
  }
  ScratchArena arena(scratch_fields(), 1);
  push_particle(particle, dt, species.q / species.m, species.q * species.common_weight, bfield,
                ScatterAccess{j.data(), grid_.n_dofs(), false}, bind(arena.worker(0)));
}

template <bool Atomic>
void Hp1Operator::push_impl(Particle& particle, double dt, double qoverm, double marker_factor,
                            std::span<const double> bfield, ScatterAccess acc,
                            const ParticleScratch& s) const {
  const Axis& ax1 = grid_.axis(0);
  const Axis& ax2 = grid_.axis(1);
  const Axis& ax3 = grid_.axis(2);
  const int p = degree_;

  const double x_old = particle.x[0];
  const double x_new = x_old + dt * particle.v[0];
  // Displacement as actually realized in floating point, so the deposited
  // charge matches the stored position change.
  const double disp = x_new - x_old;
  if (disp == 0.0) return;

  // Localization, computed once per particle and reused below.
  const CellPos c1 = locate_wrapped(x_old, ax1);
  const CellPos c2 = locate_wrapped(particle.x[1], ax2);
  const CellPos c3 = locate_wrapped(particle.x[2], ax3);

  const double delta = disp * ax1.rdelta;
  const std::int64_t cell_new = c1.cell + static_cast<std::int64_t>(std::floor(c1.xi + delta));
  const std::int64_t crossing = cell_new > c1.cell ? cell_new - c1.cell : c1.cell - cell_new;
  check_crossing(crossing, max_crossing_);

  const std::int64_t local =
      integrate_line_into(basis_pm1_, c1.cell, c1.xi, cell_new, delta, s.j1d, s.work);
  for (std::int64_t i = 0; i < local; ++i) s.j1d[static_cast<std::size_t>(i)] *= ax1.delta;

  const std::size_t np1 = static_cast<std::size_t>(p) + 1;
  const std::size_t np = static_cast<std::size_t>(p);
  const std::span<double> sp2 = s.spline_p.subspan(np1, np1);
  const std::span<double> sp3 = s.spline_p.subspan(2 * np1, np1);
  const std::span<double> spm2 = s.spline_pm1.subspan(np, np);
  const std::span<double> spm3 = s.spline_pm1.subspan(2 * np, np);
  basis_p_.eval_basis_into(c2.xi, sp2);
  basis_p_.eval_basis_into(c3.xi, sp3);
  basis_pm1_.eval_basis_into(c2.xi, spm2);
  basis_pm1_.eval_basis_into(c3.xi, spm3);

  // Precomputed wrapped indices: along x1 for the integrated basis, and the
  // (x2, x3) plane offsets of the degree-p basis functions.
  const std::int64_t n1 = ax1.n;
  const std::int64_t n2 = ax2.n;
  const std::int64_t n3 = ax3.n;
  const std::int64_t first = std::min(c1.cell, cell_new) - (p - 1);
  for (std::int64_t i = 0; i < local; ++i) s.index_x[static_cast<std::size_t>(i)] = wrap_index(first + i, n1);
  for (std::size_t k = 0; k < np1; ++k) {
    const std::int64_t i3 = wrap_index(c3.cell - p + static_cast<std::int64_t>(k), n3);
    for (std::size_t j = 0; j < np1; ++j) {
      const std::int64_t i2 = wrap_index(c2.cell - p + static_cast<std::int64_t>(j), n2);
      s.startjk[k * np1 + j] = n1 * (i2 + n2 * i3);
    }
  }

  const std::int64_t n_dofs = grid_.n_dofs();
  const double* b2 = bfield.data() + n_dofs;
  const double* b3 = bfield.data() + 2 * n_dofs;
  const double marker_charge = marker_factor * particle.w;
  const double* j1d = s.j1d.data();
  const std::int64_t* index_x = s.index_x.data();
  double* jout = acc.data;

  // The degree-(p-1) basis along x2 (x3) with row r sits at the same flat
  // index as the degree-p row r+1, hence the j-1 / k-1 offsets.
  for (std::size_t k = 0; k < np1; ++k) {
    double vtt2 = 0.0;
    double vtt3 = 0.0;
    for (std::size_t j = 0; j < np1; ++j) {
      const double splinejk = sp2[j] * sp3[k] * marker_charge;
      const std::int64_t start = s.startjk[k * np1 + j];
      double vt_b3 = 0.0;
      double vt_b2 = 0.0;
      for (std::int64_t i = 0; i < local; ++i) {
        const std::int64_t index1d = start + index_x[i];
        if constexpr (Atomic) {
          std::atomic_ref<double>(jout[index1d]).fetch_add(j1d[i] * splinejk, std::memory_order_relaxed);
        } else {
          jout[index1d] += j1d[i] * splinejk;
        }
        vt_b3 += b3[index1d] * j1d[i];
        vt_b2 += b2[index1d] * j1d[i];
      }
      if (j > 0) vtt2 += vt_b3 * spm2[j - 1];
      vtt3 += vt_b2 * sp2[j];
    }
    particle.v[1] -= qoverm * vtt2 * sp3[k];
    if (k > 0) particle.v[2] += qoverm * vtt3 * spm3[k - 1];
  }

  particle.x[0] = ax1.min + wrap_periodic(x_new - ax1.min, ax1.length);
}

StepTiming Hp1Operator::step(ParticleGroup& group, FieldDofs& fields, double dt,
                             const ExecConfig& exec) {
  const ExecConfig cfg = normalized(exec);
  if (!std::isfinite(dt)) throw_invalid("time step must be finite");
  const std::int64_t n_dofs = grid_.n_dofs();
  if (fields.n_dofs != n_dofs || static_cast<std::int64_t>(fields.j.size()) != n_dofs ||
      static_cast<std::int64_t>(fields.bfield.size()) != 3 * n_dofs) {
    throw_invalid("field DOF vectors do not match the grid");
  }

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  std::fill(fields.j.begin(), fields.j.end(), 0.0);

  const std::vector<std::size_t> layout = scratch_fields();
  if (!arena_ || !arena_->matches(layout, cfg.n_workers, cfg.scratch_mode)) {
    arena_ = std::make_unique<ScratchArena>(layout, cfg.n_workers, cfg.scratch_mode);
  }

  const bool direct = cfg.strategy == Strategy::Serial;
  if (!direct) {
    if (!accumulator_ || accumulator_->strategy() != cfg.strategy ||
        accumulator_->n_workers() != cfg.n_workers || accumulator_->n_dofs() != n_dofs ||
        accumulator_line_ != cfg.cache_line_bytes) {
      accumulator_ = std::make_unique<ScatterAccumulator>(cfg.strategy, n_dofs, cfg.n_workers,
                                                          cfg.cache_line_bytes);
      accumulator_line_ = cfg.cache_line_bytes;
    } else {
      accumulator_->reset();
    }
  }

  const double qoverm = group.q / group.m;
  const double marker_factor = group.q * group.common_weight;
  const std::span<const double> bfield = fields.bfield;
  Particle* particles = group.particles.data();
  ScatterAccess direct_access{fields.j.data(), n_dofs, false};

  parallel_for_particles(IndexRange{0, group.n_particles()}, cfg, *arena_,
                         [&](int w, std::int64_t i, const WorkerScratch& ws) {
                           const ScatterAccess acc = direct ? direct_access : accumulator_->access(w);
                           push_particle(particles[i], dt, qoverm, marker_factor, bfield, acc, bind(ws));
                         });

  const auto t1 = clock::now();
  if (!direct) accumulator_->contribute_into(fields.j);
  const auto t2 = clock::now();
  return {std::chrono::duration<double>(t1 - t0).count(),
          std::chrono::duration<double>(t2 - t1).count()};
}

}  // namespace hp1
