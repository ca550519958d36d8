#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "hp1/errors.hpp"
#include "hp1/hp1_operator.hpp"
#include "hp1/init_state.hpp"
#include "oracle.hpp"

using hp1::Grid3;
using hp1::Hp1Operator;
using hp1::Particle;

namespace {

oracle::GridDesc describe(const Grid3& g) {
  oracle::GridDesc d;
  for (int k = 0; k < 3; ++k) {
    d.n[static_cast<std::size_t>(k)] = g.axis(k).n;
    d.min[static_cast<std::size_t>(k)] = g.axis(k).min;
    d.delta[static_cast<std::size_t>(k)] = g.axis(k).delta;
  }
  return d;
}

std::vector<double> random_b(std::int64_t n_dofs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> b(static_cast<std::size_t>(3 * n_dofs));
  for (double& x : b) x = u(rng);
  return b;
}

Particle random_particle(const Grid3& g, double v_scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Particle p;
  for (int k = 0; k < 3; ++k) {
    p.x[static_cast<std::size_t>(k)] = g.axis(k).min + u(rng) * g.axis(k).length;
    p.v[static_cast<std::size_t>(k)] = (2.0 * u(rng) - 1.0) * v_scale;
  }
  p.w = 0.5 + u(rng);
  if (p.x[0] >= g.axis(0).min + g.axis(0).length) p.x[0] = g.axis(0).min;
  return p;
}

hp1::ParticleGroup species() {
  hp1::ParticleGroup s;
  s.q = -1.0;
  s.m = 1.0;
  s.common_weight = 0.7;
  return s;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("integrated_basis_line examples") {
  const hp1::PPSplineBasis b2(2);
  const auto zero = hp1::integrated_basis_line(b2, 3, 0.4, 3, 0.4, 10);
  REQUIRE(zero.values.size() == 3);
  for (double v : zero.values) CHECK(v == 0.0);

  const hp1::PPSplineBasis b0(0);
  const auto ind = hp1::integrated_basis_line(b0, 0, 0.25, 0, 0.75, 10);
  CHECK(ind.first_dof == 0);
  REQUIRE(ind.values.size() == 1);
  CHECK(ind.values[0] == 0.5);

  const auto fwd = hp1::integrated_basis_line(b2, 2, 0.8, 4, 0.1, 10);
  const auto bwd = hp1::integrated_basis_line(b2, 4, 0.1, 2, 0.8, 10);
  CHECK(fwd.first_dof == 0);
  CHECK(bwd.first_dof == 0);
  REQUIRE(fwd.values.size() == 5);
  REQUIRE(bwd.values.size() == 5);
  double sum = 0.0;
  for (std::size_t r = 0; r < 5; ++r) {
    const double ref = oracle::quadrature_integrate(2, 2.8, 4.1, fwd.first_dof + static_cast<std::int64_t>(r));
    CHECK(std::abs(fwd.values[r] - ref) <= 1e-12);
    CHECK(std::abs(bwd.values[r] + fwd.values[r]) <= 1e-15);
    sum += fwd.values[r];
  }
  CHECK(std::abs(sum - 1.3) <= 1e-12);
}

TEST_CASE("integrated_basis_line against quadrature, random segments") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int q = 0; q <= 4; ++q) {
    const hp1::PPSplineBasis b(q);
    for (int t = 0; t < 300; ++t) {
      const std::int64_t c0 = static_cast<std::int64_t>(rng() % 10);
      const std::int64_t c1 = static_cast<std::int64_t>(rng() % 10);
      const double x0 = u(rng);
      const double x1 = u(rng);
      const auto li = hp1::integrated_basis_line(b, c0, x0, c1, x1, 20);
      CHECK(li.first_dof == std::min(c0, c1) - q);
      CHECK(li.values.size() == static_cast<std::size_t>(std::abs(c1 - c0) + q + 1));
      double s = 0.0;
      for (std::size_t r = 0; r < li.values.size(); ++r) {
        const double ref = oracle::quadrature_integrate(q, static_cast<double>(c0) + x0, static_cast<double>(c1) + x1,
                                                        li.first_dof + static_cast<std::int64_t>(r));
        CHECK(std::abs(li.values[r] - ref) <= 1e-12);
        s += li.values[r];
      }
      CHECK(std::abs(s - ((static_cast<double>(c1) + x1) - (static_cast<double>(c0) + x0))) <= 1e-12);
    }
  }
}

TEST_CASE("integrated_basis_line errors") {
  const hp1::PPSplineBasis b(2);
  try {
    hp1::integrated_basis_line(b, 0, 0.5, 5, 0.5, 4);
    FAIL("expected step-too-large");
  } catch (const hp1::Error& e) {
    CHECK(e.code() == hp1::Errc::StepTooLarge);
  }
  CHECK_NOTHROW(hp1::integrated_basis_line(b, 0, 0.5, 4, 0.5, 4));
  CHECK_THROWS_AS(hp1::integrated_basis_line(b, 0, 1.0, 0, 0.5, 4), hp1::Error);
}

TEST_CASE("operator construction") {
  const Grid3 g({8, 4, 4}, {1.0, 1.0, 1.0});
  CHECK_THROWS_AS(Hp1Operator(g, 0), hp1::Error);
  CHECK_THROWS_AS(Hp1Operator(g, 13), hp1::Error);
  CHECK_THROWS_AS(Hp1Operator(g, 3, -1), hp1::Error);
  CHECK(Hp1Operator(g, 3).max_crossing() == 7);
  CHECK(Hp1Operator(g, 3, 2).scratch_slots() == 12 + 9 + 5 + 6 + 5 + 16);
}

TEST_CASE("v1 = 0 leaves the state unchanged and deposits nothing") {
  const Grid3 g({8, 4, 4}, {2.0, 1.0, 1.0});
  const Hp1Operator op(g, 3);
  const auto b = random_b(g.n_dofs(), 1);
  std::vector<double> j(static_cast<std::size_t>(g.n_dofs()), 0.0);
  Particle p{{0.3, 0.2, 0.9}, {0.0, 0.4, -0.2}, 1.5};
  const Particle before = p;
  op.push_particle(p, 0.05, species(), b, j);
  CHECK(std::memcmp(&p, &before, sizeof(Particle)) == 0);
  for (double v : j) CHECK(v == 0.0);
}

TEST_CASE("b = 0 keeps velocities, advects x1 and deposits") {
  const Grid3 g({8, 4, 4}, {2.0, 1.0, 1.0});
  const Hp1Operator op(g, 3);
  const std::vector<double> b(static_cast<std::size_t>(3 * g.n_dofs()), 0.0);
  std::vector<double> j(static_cast<std::size_t>(g.n_dofs()), 0.0);
  Particle p{{1.9, 0.2, 0.9}, {3.0, 0.4, -0.2}, 1.5};
  op.push_particle(p, 0.05, species(), b, j);
  CHECK(p.v[0] == 3.0);
  CHECK(p.v[1] == 0.4);
  CHECK(p.v[2] == -0.2);
  CHECK(p.x[0] == doctest::Approx(0.05).epsilon(1e-12));
  double total = 0.0;
  for (double v : j) total += v;
  CHECK(total == doctest::Approx(-1.0 * 1.5 * 0.7 * 0.15).epsilon(1e-12));
}

TEST_CASE("single particles match the trajectory quadrature oracle") {
  for (int p : {1, 2, 3, 4}) {
    const Grid3 g({8, 4, 4}, {-1.0, 0.0, 0.5}, {3.0, 2.0, 2.5});
    const Hp1Operator op(g, p);
    const auto b = random_b(g.n_dofs(), 42 + static_cast<std::uint64_t>(p));
    const auto desc = describe(g);
    const auto sp = species();
    std::mt19937_64 rng(100 + static_cast<std::uint64_t>(p));
    double worst_v = 0.0;
    double worst_j = 0.0;
    for (int t = 0; t < 200; ++t) {
      // Up to about 3 cells per step in either direction.
      Particle part = random_particle(g, 3.0 * g.axis(0).delta / 0.05, rng);
      const Particle start = part;
      std::vector<double> j(static_cast<std::size_t>(g.n_dofs()), 0.0);
      op.push_particle(part, 0.05, sp, b, j);
      const auto ref = oracle::hp1_reference(desc, p, start.x, start.v, start.w, 0.05, sp.q, sp.m,
                                             sp.common_weight, b);
      worst_v = std::max({worst_v, std::abs(part.v[1] - ref.v2), std::abs(part.v[2] - ref.v3)});
      for (std::size_t i = 0; i < j.size(); ++i) worst_j = std::max(worst_j, std::abs(j[i] - ref.j[i]));
    }
    CHECK(worst_v <= 1e-11);
    CHECK(worst_j <= 1e-11);
  }
}

TEST_CASE("deposited total equals the marker charge times displacement") {
  hp1::InitSpec spec;
  spec.n_particles = 2000;
  spec.n_grid = {16, 8, 8};
  spec.v_scale = hp1::crossing_v_scale(spec, 0.05, 6.5);
  auto st = hp1::init(spec);
  for (auto& part : st.group.particles) part.w = 0.25 + 1e-4 * static_cast<double>(&part - st.group.particles.data());
  const Hp1Operator op(st.grid, 3);
  double worst = 0.0;
  int crossings = 0;
  int backward = 0;
  for (Particle part : st.group.particles) {
    std::vector<double> j(static_cast<std::size_t>(st.grid.n_dofs()), 0.0);
    const double x0 = part.x[0];
    const double disp = (x0 + 0.05 * part.v[0]) - x0;
    const double cell = st.grid.axis(0).delta;
    if (std::floor(x0 / cell) != std::floor((x0 + disp) / cell)) ++crossings;
    if (std::abs(disp) > 2 * cell && disp < 0) ++backward;
    op.push_particle(part, 0.05, st.group, st.fields.bfield, j);
    const double expected = st.group.q * part.w * st.group.common_weight * disp;
    const double total = oracle::compensated_sum(j);
    worst = std::max(worst, std::abs(total - expected) / std::abs(expected));
  }
  CHECK(crossings > 1000);
  CHECK(backward > 100);
  CHECK(worst <= 1e-12);
}

TEST_CASE("retracing the path with -dt negates deposits and velocity increments") {
  const Grid3 g({8, 4, 4}, {3.0, 2.0, 2.0});
  const Hp1Operator op(g, 3);
  const auto b = random_b(g.n_dofs(), 5);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    const Particle start = random_particle(g, 2.0 * g.axis(0).delta / 0.05, rng);
    Particle fwd = start;
    std::vector<double> jf(static_cast<std::size_t>(g.n_dofs()), 0.0);
    std::vector<double> jb(jf.size(), 0.0);
    op.push_particle(fwd, 0.05, species(), b, jf);
    // Same path walked backwards: start at the end point with the old velocity.
    Particle bwd = start;
    bwd.x[0] = fwd.x[0];
    op.push_particle(bwd, -0.05, species(), b, jb);
    double scale = 0.0;
    for (double v : jf) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < jf.size(); ++i) CHECK(std::abs(jf[i] + jb[i]) <= 1e-12 * scale);
    CHECK(std::abs((fwd.v[1] - start.v[1]) + (bwd.v[1] - start.v[1])) <= 1e-12);
    CHECK(std::abs((fwd.v[2] - start.v[2]) + (bwd.v[2] - start.v[2])) <= 1e-12);
  }
}

TEST_CASE("step leaves v1, x2, x3 and w untouched and keeps x1 in the domain") {
  hp1::InitSpec spec;
  spec.n_particles = 5000;
  spec.v_scale = hp1::crossing_v_scale(spec, 0.05, 3.0);
  auto st = hp1::init(spec);
  const auto before = st.group.particles;
  Hp1Operator op(st.grid, 3);
  hp1::ExecConfig cfg;
  cfg.n_workers = 3;
  cfg.strategy = hp1::Strategy::PooledContiguous;
  op.step(st.group, st.fields, 0.05, cfg);
  const auto& ax = st.grid.axis(0);
  for (std::size_t i = 0; i < before.size(); ++i) {
    const Particle& a = before[i];
    const Particle& p = st.group.particles[i];
    CHECK(p.v[0] == a.v[0]);
    CHECK(p.x[1] == a.x[1]);
    CHECK(p.x[2] == a.x[2]);
    CHECK(p.w == a.w);
    CHECK(p.x[0] >= ax.min);
    CHECK(p.x[0] < ax.min + ax.length);
  }
}

TEST_CASE("hp1_step with no particles zeroes j") {
  const Grid3 g({8, 4, 4}, {1.0, 1.0, 1.0});
  Hp1Operator op(g, 3);
  hp1::ParticleGroup group;
  hp1::FieldDofs f(g.n_dofs());
  std::fill(f.j.begin(), f.j.end(), 3.0);
  for (auto s : {hp1::Strategy::Serial, hp1::Strategy::Replicated, hp1::Strategy::Atomic}) {
    hp1::ExecConfig cfg;
    cfg.strategy = s;
    cfg.n_workers = 2;
    hp1::hp1_step(op, group, f, 0.05, cfg);
    for (double v : f.j) CHECK(v == 0.0);
  }
  hp1::FieldDofs wrong(g.n_dofs() + 1);
  CHECK_THROWS_AS(op.step(group, wrong, 0.05, {}), hp1::Error);
}

TEST_CASE("strategies agree with the serial run") {
  hp1::InitSpec spec;
  spec.n_particles = 10000;
  spec.n_grid = {8, 4, 4};
  spec.seed = 3;
  auto run = [&](hp1::Strategy s, int workers, bool det = false) {
    auto st = hp1::init(spec);
    Hp1Operator op(st.grid, spec.degree);
    hp1::ExecConfig cfg;
    cfg.strategy = s;
    cfg.n_workers = workers;
    cfg.deterministic = det;
    op.step(st.group, st.fields, 0.05, cfg);
    op.step(st.group, st.fields, 0.05, cfg);
    return std::make_pair(st.fields.j, st.group.particles);
  };
  const auto ref = run(hp1::Strategy::Serial, 1);
  const auto rep1 = run(hp1::Strategy::Replicated, 1);
  CHECK(bitwise_equal(rep1.first, ref.first));
  CHECK(std::memcmp(rep1.second.data(), ref.second.data(), ref.second.size() * sizeof(Particle)) == 0);

  auto rel_l2 = [&](const std::vector<double>& j) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < j.size(); ++i) {
      num += (j[i] - ref.first[i]) * (j[i] - ref.first[i]);
      den += ref.first[i] * ref.first[i];
    }
    return std::sqrt(num / den);
  };
  for (auto s : {hp1::Strategy::Replicated, hp1::Strategy::ReplicatedPadded, hp1::Strategy::PooledContiguous}) {
    CHECK(rel_l2(run(s, 4).first) <= 1e-10);
  }
  CHECK(rel_l2(run(hp1::Strategy::Atomic, 4).first) <= 1e-9);

  const auto d1 = run(hp1::Strategy::Atomic, 4, true);
  const auto d2 = run(hp1::Strategy::Atomic, 4, true);
  CHECK(bitwise_equal(d1.first, d2.first));
}

TEST_CASE("translation by one cell permutes j cyclically") {
  // Unit cells and dyadic data keep every operation exact under the shift.
  const Grid3 g({4, 3, 2}, {4.0, 3.0, 2.0});
  const std::int64_t n1 = 4;
  const std::int64_t nd = g.n_dofs();
  std::mt19937_64 rng(4);
  hp1::ParticleGroup base = species();
  for (int t = 0; t < 64; ++t) {
    Particle p;
    p.x = {static_cast<double>(rng() % 32) / 8.0, static_cast<double>(rng() % 24) / 8.0,
           static_cast<double>(rng() % 16) / 8.0};
    p.v = {static_cast<double>(static_cast<int>(rng() % 97) - 48) / 16.0, 0.5, -0.25};
    p.w = 1.0 + static_cast<double>(rng() % 8) / 4.0;
    base.particles.push_back(p);
  }
  hp1::FieldDofs f0(nd);
  for (double& b : f0.bfield) b = static_cast<double>(static_cast<int>(rng() % 33) - 16) / 16.0;

  hp1::ParticleGroup shifted = base;
  for (auto& p : shifted.particles) p.x[0] = std::fmod(p.x[0] + 1.0, 4.0);
  hp1::FieldDofs f1(nd);
  for (std::int64_t c = 0; c < 3; ++c) {
    for (std::int64_t i = 0; i < nd; ++i) {
      const std::int64_t i1 = i % n1;
      const std::int64_t rest = i - i1;
      f1.bfield[static_cast<std::size_t>(c * nd + rest + (i1 + 1) % n1)] = f0.bfield[static_cast<std::size_t>(c * nd + i)];
    }
  }

  hp1::ExecConfig cfg;
  Hp1Operator op0(g, 2);
  Hp1Operator op1(g, 2);
  op0.step(base, f0, 0.5, cfg);
  op1.step(shifted, f1, 0.5, cfg);
  for (std::int64_t i = 0; i < nd; ++i) {
    const std::int64_t i1 = i % n1;
    CHECK(f1.j[static_cast<std::size_t>(i - i1 + (i1 + 1) % n1)] == f0.j[static_cast<std::size_t>(i)]);
  }
  for (std::size_t k = 0; k < base.particles.size(); ++k) {
    CHECK(shifted.particles[k].v[1] == base.particles[k].v[1]);
    CHECK(shifted.particles[k].v[2] == base.particles[k].v[2]);
    CHECK(shifted.particles[k].x[0] == std::fmod(base.particles[k].x[0] + 1.0, 4.0));
  }
}

TEST_CASE("step errors carry the particle index") {
  const Grid3 g({8, 4, 4}, {1.0, 1.0, 1.0});
  Hp1Operator op(g, 3);
  hp1::ParticleGroup group = species();
  for (int i = 0; i < 100; ++i) group.particles.push_back(Particle{{0.5, 0.5, 0.5}, {0.1, 0.0, 0.0}, 1.0});
  group.particles[37].v[0] = 1000.0;
  group.particles[80].v[0] = -1000.0;
  hp1::FieldDofs f(g.n_dofs());
  for (int workers : {1, 4}) {
    hp1::ExecConfig cfg;
    cfg.n_workers = workers;
    cfg.strategy = hp1::Strategy::Replicated;
    cfg.deterministic = true;
    auto copy = group;
    try {
      op.step(copy, f, 0.05, cfg);
      FAIL("expected an error");
    } catch (const hp1::ParticleError& e) {
      CHECK(e.index() == 37);
      CHECK(e.code() == hp1::Errc::StepTooLarge);
    }
  }
  CHECK_THROWS_AS(op.step(group, f, std::nan(""), {}), hp1::Error);
}
