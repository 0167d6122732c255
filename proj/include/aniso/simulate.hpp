#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "aniso/kernels.hpp"
#include "aniso/rng.hpp"
#include "aniso/scaling.hpp"

namespace aniso {

enum class SmallJumpMode { kDrop, kGaussian };

// Immutable per-run simulation parameters. The kernel's phi drives the
// per-coordinate jump law; eps is the exact-simulation cutoff.
struct SimConfig {
  KernelSpec kernel;
  double eps = 0.0;
  double horizon = 0.0;
  SmallJumpMode small_jump_mode = SmallJumpMode::kGaussian;
  std::uint64_t n_paths = 1;
  std::uint64_t base_seed = 0;

  int dim() const { return kernel.dim; }
  const ScalingFunction& phi() const { return kernel.phi; }
  void validate() const;  // throws on bad ranges or jump-rate overflow
};

// Inverse-CDF sampler for jump magnitudes above the cutoff, built once
// per (phi, eps) and shared across threads. The body of the law uses a
// uniform grid in the tail probability; the largest-jump regime falls
// back to a log-tail-mass grid, linear in log s (exact for power laws).
class TailSampler {
 public:
  TailSampler(const ScalingFunction& phi, double eps);

  double eps() const { return eps_; }
  double mass() const { return mass_; }       // N(eps)
  double sigma2() const { return sigma2_; }   // small-jump variance rate

  // Raw body table for the vectorized engine's gathers.
  const double* body_data() const { return body_.data(); }

  // s >= eps with N(s) = v * N(eps); strictly decreasing in v.
  double quantile(double v) const {
    const double scaled = v * kBodyCells;
    const int idx = static_cast<int>(scaled);
    if (idx >= kBodyMin) {
      const double w = scaled - idx;
      return body_[idx] + w * (body_[idx + 1] - body_[idx]);
    }
    // Big jumps: the quantile is too curved in v for the body grid, so
    // interpolate log s on the uniform log-tail-mass grid instead.
    const double pos = -std::log(v) * inv_step_;
    std::size_t k = static_cast<std::size_t>(pos);
    if (k + 1 >= log_tail_.size()) k = log_tail_.size() - 2;
    const double w = pos - static_cast<double>(k);
    return std::exp(log_tail_[k] + w * (log_tail_[k + 1] - log_tail_[k]));
  }

 private:
  static constexpr int kBodyCells = 4096;
  static constexpr int kBodyMin = 32;
  double eps_ = 0.0, mass_ = 0.0, sigma2_ = 0.0, inv_step_ = 0.0;
  std::vector<double> body_;      // kBodyCells + 1 entries, s at v = j/cells
  std::vector<double> log_tail_;  // log s at log N = log N(eps) - k*step
};

struct PathEvent {
  double time = 0.0;
  int axis = 0;
  double jump = 0.0;    // signed proposal size
  bool accepted = true;
};

struct PathSample {
  std::vector<PathEvent> events;
  Point terminal;
  std::uint64_t n_proposed = 0;
  std::uint64_t n_accepted = 0;
  std::uint64_t n_gaussian = 0;  // Gaussian increments applied
};

// Event-driven simulation of one Z path (independent coordinates, the
// multiplier is ignored). Deterministic given (config, path_index).
PathSample sample_z_path(const SimConfig& config, const TailSampler& tail,
                         std::uint64_t path_index,
                         std::span<const double> start = {});

// One X path by thinning from the dominating kernel Lambda J^phi:
// proposals arrive at total rate 2 d Lambda N(eps); a proposal of size h
// along axis i from state x is accepted with probability
// lambda(x, x + h e_i)/Lambda. Deterministic given (config, path_index).
PathSample sample_x_path(const SimConfig& config, const TailSampler& tail,
                         std::uint64_t path_index,
                         std::span<const double> start = {});

// Terminal position only, skipping event times and storage. Same jump
// law as the path samplers (the order of jumps does not affect Z, and X
// thinning consults the pre-jump state only, so the event clock can be
// marginalized out). Used by the density experiments where per-path
// event lists would dominate the cost.
void sample_terminal(const SimConfig& config, const TailSampler& tail,
                     bool thinned, std::uint64_t path_index,
                     std::span<const double> start, std::span<double> out);

// Vectorized variants of sample_terminal covering paths
// path_base..path_base+width-1, bit-identical to the scalar engine
// (counter-based streams make lane grouping irrelevant). Available for
// dim <= 2 with constant or checkerboard multipliers on AVX-512DQ
// hardware; callers must check. terminal_batch_width reports the widest
// engine compiled in (0 when none applies).
bool terminal_batch_supported(const SimConfig& config);
int terminal_batch_width(const SimConfig& config);
void sample_terminal_batch4(const SimConfig& config, const TailSampler& tail,
                            bool thinned, std::uint64_t path_base,
                            std::span<const double> start,
                            double* out /* 4 rows of dim */);
void sample_terminal_batch8(const SimConfig& config, const TailSampler& tail,
                            bool thinned, std::uint64_t path_base,
                            std::span<const double> start,
                            double* out /* 8 rows of dim */);

// First-exit tracking for nested balls around the start point. Exits are
// detected at jump times and (in Gaussian mode) at interval endpoints.
struct ExitRecord {
  std::vector<double> exit_time;  // per radius; +inf when not exited by T
  Point terminal;
};

ExitRecord sample_exit(const SimConfig& config, const TailSampler& tail,
                       bool thinned, std::uint64_t path_index,
                       std::span<const double> start,
                       std::span<const double> radii);

// Exact draw from the symmetric alpha-stable law with characteristic
// function exp(-scale_c |xi|^alpha) (Chambers-Mallows-Stuck).
double exact_stable_sample(double alpha, double scale_c, rng::Stream& stream);

// Calibration constant c_alpha = 2 int_0^inf (1-cos u) u^{-1-alpha} du of
// the Levy exponent for nu1(s) = |s|^{-1-alpha}; quadrature, so usable as
// an independent cross-check of the closed form (pi at alpha = 1).
double stable_exponent_constant(double alpha);

// The kappa-rescaled path: times divided by phi(kappa), positions and
// jump sizes divided by kappa.
PathSample rescale_path(const PathSample& path, double kappa,
                        const ScalingFunction& phi);

}  // namespace aniso
