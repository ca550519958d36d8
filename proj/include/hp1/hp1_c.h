/*
 * C interface to the hp1 particle kernel library.
 *
 * Objects are opaque handles created and destroyed through this API. Every
 * fallible call returns an hp1_status; on failure hp1_last_error() returns a
 * message for the calling thread, valid until the next failing call.
 */
#ifndef HP1_C_H
#define HP1_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(HP1_BUILDING_LIBRARY)
#define HP1_API __declspec(dllexport)
#else
#define HP1_API __declspec(dllimport)
#endif
#else
#define HP1_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hp1_status {
  HP1_OK = 0,
  HP1_ERR_INVALID_ARGUMENT = 1,
  HP1_ERR_STEP_TOO_LARGE = 2,
  HP1_ERR_IO = 3,
  HP1_ERR_LOGIC = 4,
  HP1_ERR_INTERNAL = 5
} hp1_status;

typedef enum hp1_strategy {
  HP1_STRATEGY_SERIAL = 0,
  HP1_STRATEGY_REPLICATED = 1,
  HP1_STRATEGY_PADDED = 2,
  HP1_STRATEGY_POOLED = 3,
  HP1_STRATEGY_ATOMIC = 4
} hp1_strategy;

typedef struct hp1_init_spec {
  uint64_t seed;
  int64_t n_particles;
  int32_t n_grid[3];
  double length[3];
  int32_t degree;
  double v_scale;
  double charge;
  double mass;
  double common_weight;
} hp1_init_spec;

typedef struct hp1_exec_config {
  int32_t n_workers;
  hp1_strategy strategy;
  int32_t dynamic_chunks;      /* 0: contiguous blocks, 1: chunks from a shared counter */
  int64_t chunk_size;
  int32_t deterministic;       /* forces contiguous blocks and a replicated reduction */
  int32_t interleaved_scratch; /* false-sharing scratch layout, for benchmarks */
  int32_t cache_line_bytes;
} hp1_exec_config;

typedef struct hp1_step_timing {
  double compute_seconds;
  double contribute_seconds;
} hp1_step_timing;

/* Particle state in the copy/set calls: 7 doubles per particle,
 * x1 x2 x3 v1 v2 v3 w. */
#define HP1_PARTICLE_STRIDE 7

typedef struct hp1_sim hp1_sim;

HP1_API const char* hp1_version(void);
HP1_API const char* hp1_last_error(void);
HP1_API const char* hp1_status_name(hp1_status status);

HP1_API void hp1_init_spec_default(hp1_init_spec* spec);
HP1_API void hp1_exec_config_default(hp1_exec_config* config);

HP1_API const char* hp1_strategy_name(hp1_strategy strategy);
HP1_API hp1_status hp1_strategy_from_name(const char* name, hp1_strategy* out);

/* Worker count from the HP1_NUM_THREADS environment variable, else fallback. */
HP1_API int32_t hp1_workers_from_env(int32_t fallback);
HP1_API const char* hp1_worker_env_name(void);

/* v_scale giving a largest x1 displacement of `cells` cells per step of dt. */
HP1_API hp1_status hp1_crossing_v_scale(const hp1_init_spec* spec, double dt, double cells,
                                        double* out);

HP1_API hp1_status hp1_sim_create(const hp1_init_spec* spec, hp1_sim** out);
HP1_API void hp1_sim_destroy(hp1_sim* sim);

HP1_API int64_t hp1_sim_n_particles(const hp1_sim* sim);
HP1_API int64_t hp1_sim_n_dofs(const hp1_sim* sim);

/* One H_p1 step; j is zeroed and refilled. timing may be NULL. When the call
 * fails on a particle, *failed_index (if non-NULL) receives its index, else -1. */
HP1_API hp1_status hp1_sim_step(hp1_sim* sim, double dt, const hp1_exec_config* config,
                                hp1_step_timing* timing, int64_t* failed_index);

HP1_API hp1_status hp1_sim_copy_particles(const hp1_sim* sim, double* out, int64_t capacity);
HP1_API hp1_status hp1_sim_set_particles(hp1_sim* sim, const double* in, int64_t count);
HP1_API hp1_status hp1_sim_copy_current(const hp1_sim* sim, double* out, int64_t capacity);
/* b coefficients, blocks [b1 | b2 | b3], 3 * n_dofs values. */
HP1_API hp1_status hp1_sim_copy_bfield(const hp1_sim* sim, double* out, int64_t capacity);
HP1_API hp1_status hp1_sim_set_bfield(hp1_sim* sim, const double* in, int64_t count);

/* FNV-1a 64 of the current vector bytes and of the particle array bytes. */
HP1_API hp1_status hp1_sim_checksums(const hp1_sim* sim, uint64_t* j_checksum,
                                     uint64_t* particle_checksum);
HP1_API uint64_t hp1_checksum_bytes(const void* data, size_t n_bytes);

#ifdef __cplusplus
}
#endif

#endif /* HP1_C_H */
