#include <cmath>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "hp1/errors.hpp"
#include "hp1/exec.hpp"
#include "hp1/hp1_c.h"
#include "hp1/hp1_operator.hpp"
#include "hp1/init_state.hpp"

struct hp1_sim {
  hp1::SimState state;
  hp1::Hp1Operator op;
};

namespace {

thread_local std::string g_last_error;

hp1_status set_error(hp1_status status, const char* what) {
  g_last_error = what;
  return status;
}

hp1_status to_status(hp1::Errc code) {
  switch (code) {
    case hp1::Errc::InvalidArgument: return HP1_ERR_INVALID_ARGUMENT;
    case hp1::Errc::StepTooLarge: return HP1_ERR_STEP_TOO_LARGE;
    case hp1::Errc::Io: return HP1_ERR_IO;
    case hp1::Errc::Logic: return HP1_ERR_LOGIC;
    case hp1::Errc::Internal: return HP1_ERR_INTERNAL;
  }
  return HP1_ERR_INTERNAL;
}

// Runs fn, translating exceptions into status codes.
template <class Fn>
hp1_status guarded(Fn&& fn) {
  try {
    fn();
    return HP1_OK;
  } catch (const hp1::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(HP1_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(HP1_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(HP1_ERR_INTERNAL, "unknown error");
  }
}

hp1::InitSpec to_spec(const hp1_init_spec& c) {
  hp1::InitSpec s;
  s.seed = c.seed;
  s.n_particles = c.n_particles;
  for (std::size_t k = 0; k < 3; ++k) {
    s.n_grid[k] = c.n_grid[k];
    s.lengths[k] = c.length[k];
  }
  s.degree = c.degree;
  s.v_scale = c.v_scale;
  s.q = c.charge;
  s.m = c.mass;
  s.common_weight = c.common_weight;
  return s;
}

hp1::ExecConfig to_exec(const hp1_exec_config& c) {
  hp1::ExecConfig e;
  e.n_workers = c.n_workers;
  switch (c.strategy) {
    case HP1_STRATEGY_SERIAL: e.strategy = hp1::Strategy::Serial; break;
    case HP1_STRATEGY_REPLICATED: e.strategy = hp1::Strategy::Replicated; break;
    case HP1_STRATEGY_PADDED: e.strategy = hp1::Strategy::ReplicatedPadded; break;
    case HP1_STRATEGY_POOLED: e.strategy = hp1::Strategy::PooledContiguous; break;
    case HP1_STRATEGY_ATOMIC: e.strategy = hp1::Strategy::Atomic; break;
    default: hp1::throw_invalid("unknown strategy value");
  }
  e.partition = c.dynamic_chunks ? hp1::Partition::Dynamic : hp1::Partition::Contiguous;
  e.chunk_size = c.chunk_size;
  e.deterministic = c.deterministic != 0;
  e.scratch_mode = c.interleaved_scratch ? hp1::ScratchMode::Interleaved : hp1::ScratchMode::Pooled;
  if (c.cache_line_bytes <= 0) hp1::throw_invalid("cache line size must be positive");
  e.cache_line_bytes = static_cast<std::size_t>(c.cache_line_bytes);
  return e;
}

void require(bool ok, const char* what) {
  if (!ok) hp1::throw_invalid(what);
}

}  // namespace

extern "C" {

const char* hp1_version(void) { return "0.1.0"; }

const char* hp1_last_error(void) { return g_last_error.c_str(); }

const char* hp1_status_name(hp1_status status) {
  switch (status) {
    case HP1_OK: return "ok";
    case HP1_ERR_INVALID_ARGUMENT: return "invalid argument";
    case HP1_ERR_STEP_TOO_LARGE: return "step too large";
    case HP1_ERR_IO: return "i/o error";
    case HP1_ERR_LOGIC: return "logic error";
    case HP1_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void hp1_init_spec_default(hp1_init_spec* spec) {
  if (spec == nullptr) return;
  const hp1::InitSpec d;
  spec->seed = d.seed;
  spec->n_particles = d.n_particles;
  for (std::size_t k = 0; k < 3; ++k) {
    spec->n_grid[k] = d.n_grid[k];
    spec->length[k] = d.lengths[k];
  }
  spec->degree = d.degree;
  spec->v_scale = d.v_scale;
  spec->charge = d.q;
  spec->mass = d.m;
  spec->common_weight = d.common_weight;
}

void hp1_exec_config_default(hp1_exec_config* config) {
  if (config == nullptr) return;
  const hp1::ExecConfig d;
  config->n_workers = d.n_workers;
  config->strategy = HP1_STRATEGY_SERIAL;
  config->dynamic_chunks = 0;
  config->chunk_size = d.chunk_size;
  config->deterministic = 0;
  config->interleaved_scratch = 0;
  config->cache_line_bytes = static_cast<int32_t>(d.cache_line_bytes);
}

const char* hp1_strategy_name(hp1_strategy strategy) {
  switch (strategy) {
    case HP1_STRATEGY_SERIAL: return "serial";
    case HP1_STRATEGY_REPLICATED: return "replicated";
    case HP1_STRATEGY_PADDED: return "padded";
    case HP1_STRATEGY_POOLED: return "pooled";
    case HP1_STRATEGY_ATOMIC: return "atomic";
  }
  return "unknown";
}

hp1_status hp1_strategy_from_name(const char* name, hp1_strategy* out) {
  return guarded([&] {
    require(name != nullptr && out != nullptr, "null argument");
    for (int s = HP1_STRATEGY_SERIAL; s <= HP1_STRATEGY_ATOMIC; ++s) {
      if (std::strcmp(name, hp1_strategy_name(static_cast<hp1_strategy>(s))) == 0) {
        *out = static_cast<hp1_strategy>(s);
        return;
      }
    }
    hp1::throw_invalid(std::string("unknown strategy '") + name + "'");
  });
}

int32_t hp1_workers_from_env(int32_t fallback) { return hp1::worker_count_from_env(fallback); }

const char* hp1_worker_env_name(void) { return hp1::kWorkerEnvVar; }

hp1_status hp1_crossing_v_scale(const hp1_init_spec* spec, double dt, double cells, double* out) {
  return guarded([&] {
    require(spec != nullptr && out != nullptr, "null argument");
    *out = hp1::crossing_v_scale(to_spec(*spec), dt, cells);
  });
}

hp1_status hp1_sim_create(const hp1_init_spec* spec, hp1_sim** out) {
  return guarded([&] {
    require(spec != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    hp1::SimState st = hp1::init(to_spec(*spec));
    hp1::Hp1Operator op(st.grid, spec->degree);
    *out = new hp1_sim{std::move(st), std::move(op)};
  });
}

void hp1_sim_destroy(hp1_sim* sim) { delete sim; }

int64_t hp1_sim_n_particles(const hp1_sim* sim) {
  return sim == nullptr ? 0 : sim->state.group.n_particles();
}

int64_t hp1_sim_n_dofs(const hp1_sim* sim) { return sim == nullptr ? 0 : sim->state.grid.n_dofs(); }

hp1_status hp1_sim_step(hp1_sim* sim, double dt, const hp1_exec_config* config,
                        hp1_step_timing* timing, int64_t* failed_index) {
  if (failed_index != nullptr) *failed_index = -1;
  return guarded([&] {
    require(sim != nullptr && config != nullptr, "null argument");
    try {
      const hp1::StepTiming t = sim->op.step(sim->state.group, sim->state.fields, dt, to_exec(*config));
      if (timing != nullptr) *timing = {t.compute_seconds, t.contribute_seconds};
    } catch (const hp1::ParticleError& e) {
      if (failed_index != nullptr) *failed_index = e.index();
      throw;
    }
  });
}

hp1_status hp1_sim_copy_particles(const hp1_sim* sim, double* out, int64_t capacity) {
  return guarded([&] {
    require(sim != nullptr && out != nullptr, "null argument");
    const auto& ps = sim->state.group.particles;
    const auto needed = static_cast<int64_t>(ps.size()) * HP1_PARTICLE_STRIDE;
    require(capacity >= needed, "output buffer too small");
    std::memcpy(out, ps.data(), static_cast<std::size_t>(needed) * sizeof(double));
  });
}

hp1_status hp1_sim_set_particles(hp1_sim* sim, const double* in, int64_t count) {
  return guarded([&] {
    require(sim != nullptr && (in != nullptr || count == 0), "null argument");
    require(count >= 0, "negative particle count");
    const hp1::Grid3& g = sim->state.grid;
    std::vector<hp1::Particle> ps(static_cast<std::size_t>(count));
    if (count > 0) {
      std::memcpy(static_cast<void*>(ps.data()), in, static_cast<std::size_t>(count) * HP1_PARTICLE_STRIDE * sizeof(double));
    }
    for (const hp1::Particle& p : ps) {
      for (int k = 0; k < 3; ++k) {
        const hp1::Axis& ax = g.axis(k);
        const double x = p.x[static_cast<std::size_t>(k)];
        require(x >= ax.min && x < ax.min + ax.length, "particle position outside the domain");
        require(std::isfinite(p.v[static_cast<std::size_t>(k)]), "non-finite velocity");
      }
      require(std::isfinite(p.w), "non-finite weight");
    }
    sim->state.group.particles = std::move(ps);
  });
}

hp1_status hp1_sim_copy_current(const hp1_sim* sim, double* out, int64_t capacity) {
  return guarded([&] {
    require(sim != nullptr && out != nullptr, "null argument");
    const auto& j = sim->state.fields.j;
    require(capacity >= static_cast<int64_t>(j.size()), "output buffer too small");
    std::memcpy(out, j.data(), j.size() * sizeof(double));
  });
}

hp1_status hp1_sim_copy_bfield(const hp1_sim* sim, double* out, int64_t capacity) {
  return guarded([&] {
    require(sim != nullptr && out != nullptr, "null argument");
    const auto& b = sim->state.fields.bfield;
    require(capacity >= static_cast<int64_t>(b.size()), "output buffer too small");
    std::memcpy(out, b.data(), b.size() * sizeof(double));
  });
}

hp1_status hp1_sim_set_bfield(hp1_sim* sim, const double* in, int64_t count) {
  return guarded([&] {
    require(sim != nullptr && in != nullptr, "null argument");
    auto& b = sim->state.fields.bfield;
    require(count == static_cast<int64_t>(b.size()), "b-field length must be 3 * n_dofs");
    for (int64_t i = 0; i < count; ++i) require(std::isfinite(in[i]), "non-finite b coefficient");
    std::memcpy(b.data(), in, b.size() * sizeof(double));
  });
}

hp1_status hp1_sim_checksums(const hp1_sim* sim, uint64_t* j_checksum, uint64_t* particle_checksum) {
  return guarded([&] {
    require(sim != nullptr, "null argument");
    if (j_checksum != nullptr) *j_checksum = hp1::checksum(std::span<const double>(sim->state.fields.j));
    if (particle_checksum != nullptr) {
      *particle_checksum = hp1::checksum(std::span<const hp1::Particle>(sim->state.group.particles));
    }
  });
}

uint64_t hp1_checksum_bytes(const void* data, size_t n_bytes) {
  if (data == nullptr) n_bytes = 0;
  return hp1::checksum_bytes({static_cast<const std::byte*>(data), n_bytes});
}

}  // extern "C"
