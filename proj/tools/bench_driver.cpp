#include "bench_driver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

namespace hp1bench {

namespace {

using SimPtr = std::unique_ptr<hp1_sim, decltype(&hp1_sim_destroy)>;

void check(hp1_status status, const std::string& context) {
  if (status == HP1_OK) return;
  const int code = (status == HP1_ERR_INVALID_ARGUMENT || status == HP1_ERR_STEP_TOO_LARGE)
                       ? kExitUsage
                       : status == HP1_ERR_IO ? kExitIo : kExitVerifyFailed;
  throw DriverError(code, context + ": " + hp1_status_name(status) + ": " + hp1_last_error());
}

SimPtr make_sim(const BenchConfig& cfg) {
  hp1_init_spec spec;
  hp1_init_spec_default(&spec);
  spec.seed = cfg.seed;
  spec.n_particles = cfg.particles;
  for (int k = 0; k < 3; ++k) spec.n_grid[k] = cfg.grid[static_cast<std::size_t>(k)];
  spec.degree = cfg.degree;
  if (cfg.v_scale > 0.0) spec.v_scale = cfg.v_scale;
  if (cfg.fast) check(hp1_crossing_v_scale(&spec, cfg.dt, kFastCrossingCells, &spec.v_scale), "fast preset");
  hp1_sim* raw = nullptr;
  check(hp1_sim_create(&spec, &raw), "initialization");
  return SimPtr(raw, &hp1_sim_destroy);
}

hp1_exec_config make_exec(const BenchConfig& cfg, hp1_strategy strategy, int workers) {
  hp1_exec_config exec;
  hp1_exec_config_default(&exec);
  exec.strategy = strategy;
  exec.n_workers = workers;
  exec.deterministic = cfg.deterministic ? 1 : 0;
  exec.cache_line_bytes = cfg.cache_line_bytes;
  exec.interleaved_scratch = cfg.interleaved_scratch ? 1 : 0;
  return exec;
}

void step(hp1_sim* sim, const BenchConfig& cfg, const hp1_exec_config& exec, hp1_step_timing* timing) {
  std::int64_t failed = -1;
  const hp1_status st = hp1_sim_step(sim, cfg.dt, &exec, timing, &failed);
  if (st != HP1_OK) {
    check(st, failed >= 0 ? "step, particle " + std::to_string(failed) : std::string("step"));
  }
}

// Serial ignores the worker list and runs once on one worker.
std::vector<int> workers_for(hp1_strategy s, const std::vector<int>& list) {
  if (s == HP1_STRATEGY_SERIAL) return {1};
  return list;
}

std::string grid_string(const std::array<int, 3>& g) {
  return std::to_string(g[0]) + "x" + std::to_string(g[1]) + "x" + std::to_string(g[2]);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 9);
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> copy_current(const hp1_sim* sim) {
  std::vector<double> j(static_cast<std::size_t>(hp1_sim_n_dofs(sim)));
  check(hp1_sim_copy_current(sim, j.data(), static_cast<std::int64_t>(j.size())), "copy current");
  return j;
}

std::vector<double> copy_particles(const hp1_sim* sim) {
  std::vector<double> p(static_cast<std::size_t>(hp1_sim_n_particles(sim) * HP1_PARTICLE_STRIDE));
  check(hp1_sim_copy_particles(sim, p.data(), static_cast<std::int64_t>(p.size())), "copy particles");
  return p;
}

}  // namespace

BenchConfig paper_config(BenchConfig base) {
  base.particles = 10'000'000;
  base.grid = {16, 8, 8};
  base.degree = 3;
  base.dt = 0.05;
  base.iterations = 3;
  return base;
}

void validate(const BenchConfig& c) {
  auto fail = [](const std::string& what) { throw DriverError(kExitUsage, what); };
  if (c.particles < 1) fail("--particles must be at least 1");
  for (int n : c.grid) {
    if (n < 1) fail("--grid entries must be at least 1");
  }
  if (c.degree < 1 || c.degree > 12) fail("--degree must be in [1, 12]");
  if (!std::isfinite(c.dt)) fail("--dt must be finite");
  if (c.iterations < 1) fail("--iterations must be at least 1");
  if (c.repeats < 1) fail("--repeats must be at least 1");
  if (c.workers.empty()) fail("--workers must list at least one count");
  for (int w : c.workers) {
    if (w < 1) fail("every worker count must be at least 1");
  }
  if (c.strategies.empty()) fail("--strategy must list at least one strategy");
}

std::vector<BenchRecord> run_bench(const BenchConfig& cfg, std::ostream& summary) {
  validate(cfg);
  std::vector<hp1_strategy> strategies = cfg.strategies;
  if (cfg.mode == Mode::Sweep &&
      std::find(strategies.begin(), strategies.end(), HP1_STRATEGY_SERIAL) == strategies.end()) {
    strategies.insert(strategies.begin(), HP1_STRATEGY_SERIAL);
  }

  std::vector<BenchRecord> records;
  for (hp1_strategy s : strategies) {
    for (int workers : workers_for(s, cfg.workers)) {
      const hp1_exec_config exec = make_exec(cfg, s, workers);
      for (int rep = 0; rep < cfg.repeats; ++rep) {
        SimPtr sim = make_sim(cfg);
        for (int it = 0; it < cfg.iterations; ++it) {
          hp1_step_timing t{};
          step(sim.get(), cfg, exec, &t);
          BenchRecord r;
          r.strategy = hp1_strategy_name(s);
          r.workers = workers;
          r.particles = cfg.particles;
          r.grid = cfg.grid;
          r.degree = cfg.degree;
          r.iteration = it;
          r.repeat = rep;
          r.compute_seconds = t.compute_seconds;
          r.contribute_seconds = t.contribute_seconds;
          check(hp1_sim_checksums(sim.get(), &r.j_checksum, &r.particle_checksum), "checksums");
          records.push_back(std::move(r));
        }
      }
    }
  }

  // Per-configuration summary, in first-seen order.
  std::vector<std::pair<std::string, int>> keys;
  std::map<std::pair<std::string, int>, std::vector<double>> compute;
  std::map<std::pair<std::string, int>, std::vector<double>> contribute;
  for (const BenchRecord& r : records) {
    const auto key = std::make_pair(r.strategy, r.workers);
    if (!compute.count(key)) keys.push_back(key);
    compute[key].push_back(r.compute_seconds);
    contribute[key].push_back(r.contribute_seconds);
  }
  const auto serial_key = std::make_pair(std::string("serial"), 1);
  summary << "strategy      workers  mean_compute_s  median_compute_s  mean_contribute_s  speedup\n";
  for (const auto& key : keys) {
    double baseline = 0.0;
    if (compute.count(serial_key)) {
      baseline = mean_of(compute[serial_key]);
    } else {
      int fewest = key.second;
      for (const auto& k : keys) {
        if (k.first == key.first) fewest = std::min(fewest, k.second);
      }
      baseline = mean_of(compute[{key.first, fewest}]);
    }
    const double m = mean_of(compute[key]);
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s  %7d  %14.6f  %16.6f  %17.6f  %7.2f\n", key.first.c_str(),
                  key.second, m, median_of(compute[key]), mean_of(contribute[key]),
                  m > 0.0 ? baseline / m : 0.0);
    summary << line;
  }
  return records;
}

std::string csv_header() {
  return "strategy,workers,particles,grid,degree,iteration,repeat,compute_seconds,"
         "contribute_seconds,j_checksum,particle_checksum";
}

std::string csv_row(const BenchRecord& r) {
  std::string row;
  row += r.strategy + ',' + std::to_string(r.workers) + ',' + std::to_string(r.particles) + ',' +
         grid_string(r.grid) + ',' + std::to_string(r.degree) + ',' + std::to_string(r.iteration) +
         ',' + std::to_string(r.repeat) + ',' + format_double(r.compute_seconds) + ',' +
         format_double(r.contribute_seconds) + ',' + hex64(r.j_checksum) + ',' +
         hex64(r.particle_checksum);
  return row;
}

void write_csv(const std::string& path, const std::vector<BenchRecord>& records) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DriverError(kExitIo, "cannot write " + tmp.string());
    out << csv_header() << '\n';
    for (const BenchRecord& r : records) out << csv_row(r) << '\n';
    out.flush();
    if (!out) throw DriverError(kExitIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DriverError(kExitIo, "cannot move CSV into place at " + path);
  }
}

double verify_tolerance(hp1_strategy strategy, int workers) {
  switch (strategy) {
    case HP1_STRATEGY_SERIAL: return 0.0;
    case HP1_STRATEGY_REPLICATED: return workers == 1 ? 0.0 : 1e-10;
    case HP1_STRATEGY_PADDED:
    case HP1_STRATEGY_POOLED: return 1e-10;
    case HP1_STRATEGY_ATOMIC: return 1e-9;
  }
  return 0.0;
}

VerifyReport run_verify(const BenchConfig& cfg, std::ostream& out) {
  validate(cfg);
  // Serial reference: j after every iteration, particles at the end.
  std::vector<std::vector<double>> ref_j;
  std::vector<double> ref_particles;
  {
    SimPtr sim = make_sim(cfg);
    const hp1_exec_config exec = make_exec(cfg, HP1_STRATEGY_SERIAL, 1);
    for (int it = 0; it < cfg.iterations; ++it) {
      step(sim.get(), cfg, exec, nullptr);
      ref_j.push_back(copy_current(sim.get()));
    }
    ref_particles = copy_particles(sim.get());
  }

  VerifyReport report;
  out << "strategy      workers  j_rel_l2      particle_max_abs  tolerance  result\n";
  for (hp1_strategy s : cfg.strategies) {
    for (int workers : workers_for(s, cfg.workers)) {
      VerifyResult r;
      r.strategy = hp1_strategy_name(s);
      r.workers = workers;
      r.tolerance = verify_tolerance(s, workers);
      SimPtr sim = make_sim(cfg);
      const hp1_exec_config exec = make_exec(cfg, s, workers);
      bool bitwise = true;
      for (int it = 0; it < cfg.iterations; ++it) {
        step(sim.get(), cfg, exec, nullptr);
        const std::vector<double> j = copy_current(sim.get());
        const std::vector<double>& ref = ref_j[static_cast<std::size_t>(it)];
        double diff2 = 0.0;
        double ref2 = 0.0;
        for (std::size_t i = 0; i < j.size(); ++i) {
          const double d = j[i] - ref[i];
          diff2 += d * d;
          ref2 += ref[i] * ref[i];
          if (std::memcmp(&j[i], &ref[i], sizeof(double)) != 0) bitwise = false;
        }
        const double rel = ref2 > 0.0 ? std::sqrt(diff2 / ref2) : std::sqrt(diff2);
        r.j_rel_l2 = std::max(r.j_rel_l2, rel);
      }
      const std::vector<double> ps = copy_particles(sim.get());
      for (std::size_t i = 0; i < ps.size(); ++i) {
        r.particle_max_abs = std::max(r.particle_max_abs, std::abs(ps[i] - ref_particles[i]));
        if (std::memcmp(&ps[i], &ref_particles[i], sizeof(double)) != 0) bitwise = false;
      }
      r.pass = r.tolerance == 0.0
                   ? bitwise
                   : (r.j_rel_l2 <= r.tolerance && r.particle_max_abs <= r.tolerance);
      report.pass = report.pass && r.pass;

      char line[160];
      std::snprintf(line, sizeof(line), "%-12s  %7d  %.3e     %.3e         %-9s  %s\n", r.strategy.c_str(),
                    r.workers, r.j_rel_l2, r.particle_max_abs,
                    r.tolerance == 0.0 ? "bitwise" : format_double(r.tolerance).substr(0, 5).c_str(),
                    r.pass ? "PASS" : "FAIL");
      out << line;
      report.results.push_back(std::move(r));
    }
  }
  return report;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"H_p1 particle kernel benchmark and verification harness"};
  app.footer(std::string("Environment: ") + hp1_worker_env_name() +
             " sets the worker count when --workers is not given.\n"
             "Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.");

  BenchConfig cfg;
  std::vector<int> grid;
  std::vector<std::string> strategy_names;
  std::string mode_name = "bench";
  bool use_paper = false;

  app.add_option("--particles", cfg.particles, "Number of macro-particles")->capture_default_str();
  app.add_option("--grid", grid, "Cells per axis, NX,NY,NZ")->delimiter(',')->expected(3);
  app.add_option("--degree", cfg.degree, "Spline degree p")->capture_default_str();
  app.add_option("--dt", cfg.dt, "Time step")->capture_default_str();
  app.add_option("--iterations", cfg.iterations, "Timed steps per run")->capture_default_str();
  app.add_option("--repeats", cfg.repeats, "Runs per configuration")->capture_default_str();
  auto* workers_opt = app.add_option("--workers", cfg.workers, "Worker counts, comma separated")
                          ->delimiter(',');
  app.add_option("--strategy", strategy_names,
                 "Strategies: serial,replicated,padded,pooled,atomic")
      ->delimiter(',');
  app.add_option("--seed", cfg.seed, "Initialization seed")->capture_default_str();
  app.add_option("--csv", cfg.csv_path, "CSV output path")->capture_default_str();
  app.add_option("--mode", mode_name, "bench, verify or sweep")
      ->check(CLI::IsMember({"bench", "verify", "sweep"}))
      ->capture_default_str();
  app.add_flag("--paper-config", use_paper,
               "10^7 particles, 16x8x8 grid, degree 3, 3 iterations, dt 0.05");
  app.add_flag("--deterministic", cfg.deterministic,
               "Static partitioning and replicated reduction (bitwise reproducible)");
  app.add_option("--v-scale", cfg.v_scale, "Velocity scale (default keeps dt*v1 below one cell)");
  app.add_flag("--fast", cfg.fast, "Velocities up to 3 cells per step, multi-cell crossings both ways");
  app.add_option("--cache-line", cfg.cache_line_bytes, "Cache line size in bytes for padding")
      ->capture_default_str();
  app.add_flag("--interleaved-scratch", cfg.interleaved_scratch,
               "Field-major scratch layout that provokes false sharing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (!grid.empty()) cfg.grid = {grid[0], grid[1], grid[2]};
    if (use_paper) cfg = paper_config(cfg);
    cfg.mode = mode_name == "verify" ? Mode::Verify : mode_name == "sweep" ? Mode::Sweep : Mode::Bench;
    if (!strategy_names.empty()) {
      cfg.strategies.clear();
      for (const std::string& name : strategy_names) {
        hp1_strategy s;
        if (hp1_strategy_from_name(name.c_str(), &s) != HP1_OK) {
          throw DriverError(kExitUsage, "unknown strategy '" + name + "'");
        }
        cfg.strategies.push_back(s);
      }
    } else if (cfg.mode == Mode::Verify) {
      cfg.strategies = {HP1_STRATEGY_SERIAL, HP1_STRATEGY_REPLICATED, HP1_STRATEGY_PADDED,
                        HP1_STRATEGY_POOLED, HP1_STRATEGY_ATOMIC};
    }
    if (workers_opt->count() == 0) {
      const int env = hp1_workers_from_env(0);
      if (cfg.mode == Mode::Sweep) {
        const int top = env > 0 ? env : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        cfg.workers.clear();
        for (int w = 1; w <= top; w *= 2) cfg.workers.push_back(w);
        if (cfg.workers.back() != top) cfg.workers.push_back(top);
      } else {
        cfg.workers = {env > 0 ? env : 1};
      }
    }
    validate(cfg);

    if (cfg.mode == Mode::Verify) {
      const VerifyReport report = run_verify(cfg, std::cout);
      std::cout << (report.pass ? "verify: PASS\n" : "verify: FAIL\n");
      if (!report.pass) {
        for (const VerifyResult& r : report.results) {
          if (!r.pass) std::cerr << "failed: " << r.strategy << " with " << r.workers << " workers\n";
        }
        return kExitVerifyFailed;
      }
      return kExitOk;
    }

    const std::vector<BenchRecord> records = run_bench(cfg, std::cout);
    write_csv(cfg.csv_path, records);
    std::cout << "wrote " << records.size() << " records to " << cfg.csv_path << '\n';
    return kExitOk;
  } catch (const DriverError& e) {
    std::cerr << "hp1bench: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "hp1bench: " << e.what() << '\n';
    return kExitVerifyFailed;
  }
}

}  // namespace hp1bench
