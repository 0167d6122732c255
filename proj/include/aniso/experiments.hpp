#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <json.hpp>

#include "aniso/config.hpp"
#include "aniso/simulate.hpp"
#include "aniso/verify.hpp"

namespace aniso {

// Exit statuses shared by the CLI and the experiment drivers.
enum ExitStatus : int {
  kStatusPass = 0,
  kStatusFail = 1,
  kStatusInconclusive = 2,
  kStatusConfigError = 3,
};

struct RunResult {
  Verdict verdict = Verdict::kInconclusive;
  nlohmann::json report;
  int status() const {
    switch (verdict) {
      case Verdict::kPass:
        return kStatusPass;
      case Verdict::kFail:
        return kStatusFail;
      case Verdict::kInconclusive:
        return kStatusInconclusive;
    }
    return kStatusConfigError;
  }
};

// Maps contiguous path ranges onto a worker pool. Results must be merged
// by the caller in a schedule-independent way (integer counts, or
// per-path slots folded in index order).
void parallel_paths(std::uint64_t n_paths, int workers,
                    const std::function<void(std::uint64_t begin,
                                             std::uint64_t end, int worker)>&
                        body);

int resolve_workers(int hint);

// Materialized simulation pieces shared by the drivers.
struct SimSetup {
  SimConfig sim;
  TailSampler tail;
  bool thinned = false;
  Point start;
};

SimSetup make_sim_setup(const ExperimentConfig& cfg, double time_scale_eps);

// Density histogram of terminal positions (terminal-only engine).
DensityHistogram terminal_histogram(const SimSetup& setup, double t,
                                    double bin_width, double half_width,
                                    int workers);

// Experiment drivers; each returns the populated report JSON.
RunResult envelope_experiment(const ExperimentConfig& cfg);
RunResult exit_experiment(const ExperimentConfig& cfg);
RunResult mean_exit_experiment(const ExperimentConfig& cfg);
RunResult diag_experiment(const ExperimentConfig& cfg);
RunResult ladder_experiment(const ExperimentConfig& cfg);
RunResult nash_experiment(const ExperimentConfig& cfg);
RunResult phi_check_experiment(const ExperimentConfig& cfg);
RunResult simulate_experiment(const ExperimentConfig& cfg);

// Dispatch on cfg.experiment; fills the common report envelope
// (schema_version, config_digest, seed, n_paths, wall_time_s).
RunResult run_experiment(const ExperimentConfig& cfg);

}  // namespace aniso
