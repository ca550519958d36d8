#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hp1/hp1_c.h"

namespace hp1bench {

enum class Mode { Bench, Verify, Sweep };

/// Largest x1 displacement per step, in cells, of the fast preset.
inline constexpr double kFastCrossingCells = 3.0;

enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitUsage = 2,
  kExitIo = 3,
};

/// Carries the process exit code for the failure.
class DriverError : public std::runtime_error {
 public:
  DriverError(int exit_code, const std::string& what) : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

struct BenchConfig {
  std::int64_t particles = 1'000'000;
  std::array<int, 3> grid{16, 8, 8};
  int degree = 3;
  double dt = 0.05;
  int iterations = 3;
  int repeats = 1;
  std::vector<int> workers{1};
  std::vector<hp1_strategy> strategies{HP1_STRATEGY_POOLED};
  std::uint64_t seed = 1;
  std::string csv_path = "hp1bench.csv";
  Mode mode = Mode::Bench;
  bool deterministic = false;
  /// Velocity scale; <= 0 selects the library default.
  double v_scale = 0.0;
  /// Velocity scale giving up to kFastCrossingCells cells per step (overrides v_scale).
  bool fast = false;
  int cache_line_bytes = 64;
  bool interleaved_scratch = false;
};

/// 10^7 particles, 16x8x8 grid, degree 3, dt 0.05, 3 iterations.
BenchConfig paper_config(BenchConfig base = {});

/// Throws DriverError(kExitUsage) on an invalid configuration.
void validate(const BenchConfig& config);

struct BenchRecord {
  std::string strategy;
  int workers = 1;
  std::int64_t particles = 0;
  std::array<int, 3> grid{};
  int degree = 0;
  int iteration = 0;
  int repeat = 0;
  double compute_seconds = 0.0;
  double contribute_seconds = 0.0;
  std::uint64_t j_checksum = 0;
  std::uint64_t particle_checksum = 0;
};

/// Runs every (strategy, workers, repeat) from a fresh seeded state and times
/// `iterations` steps each. Writes a summary to `summary`. Serial runs once,
/// with one worker, whatever the worker list.
std::vector<BenchRecord> run_bench(const BenchConfig& config, std::ostream& summary);

std::string csv_header();
std::string csv_row(const BenchRecord& record);
/// Writes header + rows to a temporary file, then renames it over `path`.
void write_csv(const std::string& path, const std::vector<BenchRecord>& records);

struct VerifyResult {
  std::string strategy;
  int workers = 1;
  double j_rel_l2 = 0.0;
  double particle_max_abs = 0.0;
  double tolerance = 0.0;  // 0 means bitwise
  bool pass = false;
};

struct VerifyReport {
  std::vector<VerifyResult> results;
  bool pass = true;
};

/// Tolerance on the relative L2 deviation of j against the serial run.
double verify_tolerance(hp1_strategy strategy, int workers);

VerifyReport run_verify(const BenchConfig& config, std::ostream& report);

/// Entry point of the hp1bench executable; returns the exit code.
int run_cli(int argc, char** argv);

}  // namespace hp1bench
