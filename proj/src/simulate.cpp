#include "aniso/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aniso/quadrature.hpp"

namespace aniso {
namespace {

constexpr int kMaxDim = 8;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

void SimConfig::validate() const {
  kernel.validate();
  require(eps > 0.0, "sim: eps must be positive");
  require(horizon > 0.0, "sim: horizon must be positive");
  require(n_paths >= 1, "sim: n_paths must be >= 1");
  require(kernel.dim <= kMaxDim, "sim: dim too large for the engine");
  if (kernel.truncation)
    throw std::invalid_argument("sim: truncated kernels are not simulated");
  const double expected = 2.0 * kernel.dim * kernel.lambda_bound *
                          kernel.phi.tail_mass(eps) * horizon;
  if (expected > 1e7)
    throw std::invalid_argument(
        "sim: expected jump count per path exceeds 1e7; raise eps");
}

TailSampler::TailSampler(const ScalingFunction& phi, double eps) : eps_(eps) {
  require(eps > 0.0, "TailSampler: eps must be positive");
  sigma2_ = phi.small_jump_variance(eps);

  // Anchor the tail far enough out that N(s_max)/N(eps) <= ~1e-22, using
  // the certificate to bound the reach, then accumulate tail masses
  // backward on a fine log grid. Backward accumulation keeps full
  // relative precision at every depth; forward subtraction would lose
  // the tail to cancellation.
  const WsCertificate& cert = phi.certificate();
  const double rough_mass = phi.tail_mass(eps);
  const double reach =
      std::pow(1e22 / (cert.c_lower * cert.c_lower * cert.alpha_lower *
                       phi(eps) * rough_mass),
               1.0 / cert.alpha_lower);
  const int per_octave = 16;
  int octaves = static_cast<int>(std::ceil(std::log2(std::max(reach, 4.0))));
  octaves = std::min(octaves, 6000 / per_octave);

  std::vector<double> ls(static_cast<std::size_t>(per_octave) * octaves + 1);
  const double log2_16 = std::log(2.0) / per_octave;
  for (std::size_t j = 0; j < ls.size(); ++j)
    ls[j] = std::log(eps) + static_cast<double>(j) * log2_16;
  std::vector<double> ln(ls.size());
  {
    const double s_max = std::exp(ls.back());
    const double a_fit = std::log(phi(4.0 * s_max) / phi(s_max)) / std::log(4.0);
    double acc = 1.0 / (a_fit * phi(s_max));
    ln.back() = std::log(acc);
    for (std::size_t j = ls.size() - 1; j > 0; --j) {
      acc += integrate_gk([&phi](double s) { return phi.nu1(s); },
                          std::exp(ls[j - 1]), std::exp(ls[j]), 1e-12);
      ln[j - 1] = std::log(acc);
    }
    mass_ = acc;
  }

  // Resample onto a uniform grid in log N with step 0.05: log s is close
  // to affine in log N, so linear interpolation is nearly exact.
  const double step = 0.05;
  inv_step_ = 1.0 / step;
  const std::size_t k_max = static_cast<std::size_t>(46.0 / step);
  log_tail_.resize(k_max + 2);
  std::size_t src = 0;
  for (std::size_t k = 0; k < log_tail_.size(); ++k) {
    const double target = std::log(mass_) - static_cast<double>(k) * step;
    while (src + 2 < ln.size() && ln[src + 1] > target) ++src;
    const double w = (ln[src] - target) / (ln[src] - ln[src + 1]);
    log_tail_[k] = ls[src] + w * (ls[src + 1] - ls[src]);
  }

  body_.resize(kBodyCells + 1);
  body_[kBodyCells] = eps;
  for (int j = kBodyMin; j < kBodyCells; ++j) {
    const double v = static_cast<double>(j) / kBodyCells;
    const double pos = -std::log(v) * inv_step_;
    const std::size_t k = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(k);
    body_[j] = std::exp(log_tail_[k] + w * (log_tail_[k + 1] - log_tail_[k]));
  }
  for (int j = 0; j < kBodyMin; ++j) body_[j] = 0.0;  // tail branch territory
}

namespace {

struct Streams {
  rng::Stream times, axes, mags, signs, thin, gauss;
  Streams(std::uint64_t seed, std::uint64_t path)
      : times(seed, path, rng::kTimes),
        axes(seed, path, rng::kAxes),
        mags(seed, path, rng::kMagnitudes),
        signs(seed, path, rng::kSigns),
        thin(seed, path, rng::kThinning),
        gauss(seed, path, rng::kGaussian) {}
};

// Shared event-driven path engine; thinned = false reproduces Z.
PathSample run_path(const SimConfig& cfg, const TailSampler& tail,
                    bool thinned, std::uint64_t path_index,
                    std::span<const double> start) {
  const int d = cfg.dim();
  const double lambda = thinned ? cfg.kernel.lambda_bound : 1.0;
  const double total_rate = 2.0 * d * lambda * tail.mass();
  const double sigma = std::sqrt(tail.sigma2());
  const bool gaussian = cfg.small_jump_mode == SmallJumpMode::kGaussian;

  Streams s(cfg.base_seed, path_index);
  PathSample out;
  out.terminal.assign(d, 0.0);
  if (!start.empty()) {
    require(static_cast<int>(start.size()) == d, "sim: start dim mismatch");
    std::copy(start.begin(), start.end(), out.terminal.begin());
  }

  double clock = 0.0;
  for (;;) {
    const double dt = s.times.next_exp() / total_rate;
    const double next = clock + dt;
    const double step = std::min(next, cfg.horizon) - clock;
    if (gaussian && step > 0.0) {
      const double sd = sigma * std::sqrt(step);
      for (int i = 0; i < d; ++i) out.terminal[i] += sd * s.gauss.next_normal();
      out.n_gaussian += d;
    }
    if (next > cfg.horizon) break;
    clock = next;

    const int axis = static_cast<int>(s.axes.next_index(d));
    const double v = s.mags.next_unit();
    const double mag = tail.quantile(v);
    const double jump = s.signs.next_sign_negative() ? -mag : mag;
    bool accepted = true;
    if (thinned) {
      const double lam =
          cfg.kernel.multiplier.axis_jump(out.terminal, axis, jump);
      const double p = lam / cfg.kernel.lambda_bound;
      const double floor =
          1.0 / (cfg.kernel.lambda_bound * cfg.kernel.lambda_bound);
      if (p < floor - 1e-12 || p > 1.0 + 1e-12)
        throw std::runtime_error(
            "sim: acceptance probability outside [Lambda^-2, 1]");
      accepted = s.thin.next_unit() <= p;
    }
    ++out.n_proposed;
    if (accepted) {
      out.terminal[axis] += jump;
      ++out.n_accepted;
    }
    out.events.push_back({clock, axis, jump, accepted});
  }
  return out;
}

}  // namespace

PathSample sample_z_path(const SimConfig& config, const TailSampler& tail,
                         std::uint64_t path_index,
                         std::span<const double> start) {
  return run_path(config, tail, false, path_index, start);
}

PathSample sample_x_path(const SimConfig& config, const TailSampler& tail,
                         std::uint64_t path_index,
                         std::span<const double> start) {
  return run_path(config, tail, true, path_index, start);
}

namespace {

// Hot loop shared by the terminal-only engine. Branchless state update;
// LambdaFn is the inlined multiplier evaluated at (state, axis, jump).
// Draw layout per event: one axes/magnitudes/signs draw each, plus one
// thinning draw when thinned; times holds a single Poisson count.
template <class LambdaFn>
void terminal_core(const SimConfig& cfg, const TailSampler& tail, bool thinned,
                   std::uint64_t path_index, std::span<const double> start,
                   std::span<double> out, LambdaFn&& lam) {
  const int d = cfg.dim();
  const double lambda = thinned ? cfg.kernel.lambda_bound : 1.0;
  const double inv_lambda = 1.0 / lambda;
  const double mean = 2.0 * d * lambda * tail.mass() * cfg.horizon;

  rng::Stream times(cfg.base_seed, path_index, rng::kTimes);
  const std::uint64_t count = times.next_poisson(mean);

  std::uint64_t s_ax = rng::stream_key(cfg.base_seed, path_index, rng::kAxes);
  std::uint64_t s_mag =
      rng::stream_key(cfg.base_seed, path_index, rng::kMagnitudes);
  std::uint64_t s_sgn =
      rng::stream_key(cfg.base_seed, path_index, rng::kSigns);
  std::uint64_t s_thn =
      rng::stream_key(cfg.base_seed, path_index, rng::kThinning);

  double pos[kMaxDim];
  for (int i = 0; i < d; ++i) pos[i] = start.empty() ? 0.0 : start[i];

  for (std::uint64_t k = 0; k < count; ++k) {
    s_ax += rng::kGolden;
    s_mag += rng::kGolden;
    s_sgn += rng::kGolden;
    const std::uint64_t u_ax = rng::mix64(s_ax);
    const std::uint64_t u_mag = rng::mix64(s_mag);
    const std::uint64_t u_sgn = rng::mix64(s_sgn);
    const int axis = static_cast<int>(
        (static_cast<unsigned __int128>(u_ax) * static_cast<unsigned>(d)) >>
        64);
    const double v =
        (static_cast<double>(u_mag >> 11) + 0.5) * 0x1p-53;
    const double mag = tail.quantile(v);
    const double jump = (u_sgn >> 63) ? -mag : mag;
    double accept = 1.0;
    if (thinned) {
      s_thn += rng::kGolden;
      const double u =
          (static_cast<double>(rng::mix64(s_thn) >> 11) + 0.5) * 0x1p-53;
      const double p = lam(pos, axis, jump) * inv_lambda;
      accept = (u <= p) ? 1.0 : 0.0;
    }
    pos[axis] = pos[axis] + accept * jump;
  }
  if (cfg.small_jump_mode == SmallJumpMode::kGaussian) {
    rng::Stream gauss(cfg.base_seed, path_index, rng::kGaussian);
    const double sd = std::sqrt(tail.sigma2() * cfg.horizon);
    for (int i = 0; i < d; ++i) pos[i] += sd * gauss.next_normal();
  }
  for (int i = 0; i < d; ++i) out[i] = pos[i];
}

}  // namespace

void sample_terminal(const SimConfig& config, const TailSampler& tail,
                     bool thinned, std::uint64_t path_index,
                     std::span<const double> start, std::span<double> out) {
  const Multiplier& m = config.kernel.multiplier;
  switch (m.kind()) {
    case Multiplier::Kind::kConstant: {
      const double c = m.max_value();
      terminal_core(config, tail, thinned, path_index, start, out,
                    [c](const double*, int, double) { return c; });
      return;
    }
    case Multiplier::Kind::kCheckerboard: {
      // Inlined cell parity; same arithmetic as Multiplier::axis_jump.
      const double inv_p = m.inv_period();
      const double lo = m.min_value(), hi = m.max_value();
      terminal_core(
          config, tail, thinned, path_index, start, out,
          [inv_p, lo, hi, d = config.dim()](const double* x, int axis,
                                            double h) {
            long long acc = 0;
            for (int i = 0; i < d; ++i) {
              const double mid = (i == axis) ? x[i] + 0.5 * h : x[i];
              acc += static_cast<long long>(std::floor(mid * inv_p));
            }
            return (acc & 1) ? hi : lo;
          });
      return;
    }
    case Multiplier::Kind::kSmoothWave:
      terminal_core(config, tail, thinned, path_index, start, out,
                    [&m, d = config.dim()](const double* x, int axis,
                                           double h) {
                      return m.axis_jump(std::span<const double>(x, d), axis,
                                         h);
                    });
      return;
  }
}

ExitRecord sample_exit(const SimConfig& config, const TailSampler& tail,
                       bool thinned, std::uint64_t path_index,
                       std::span<const double> start,
                       std::span<const double> radii) {
  const int d = config.dim();
  const double lambda = thinned ? config.kernel.lambda_bound : 1.0;
  const double total_rate = 2.0 * d * lambda * tail.mass();
  const double sigma = std::sqrt(tail.sigma2());
  const bool gaussian = config.small_jump_mode == SmallJumpMode::kGaussian;

  Streams s(config.base_seed, path_index);
  ExitRecord rec;
  rec.exit_time.assign(radii.size(), std::numeric_limits<double>::infinity());
  rec.terminal.assign(d, 0.0);
  double pos[kMaxDim], origin[kMaxDim];
  for (int i = 0; i < d; ++i) {
    pos[i] = start.empty() ? 0.0 : start[i];
    origin[i] = pos[i];
  }

  std::size_t next_radius = 0;
  const auto check_exit = [&](double now) {
    double dist2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double delta = pos[i] - origin[i];
      dist2 += delta * delta;
    }
    while (next_radius < radii.size() &&
           dist2 > radii[next_radius] * radii[next_radius]) {
      rec.exit_time[next_radius] = now;
      ++next_radius;
    }
  };

  double clock = 0.0;
  for (;;) {
    const double dt = s.times.next_exp() / total_rate;
    const double next = clock + dt;
    const double step = std::min(next, config.horizon) - clock;
    if (gaussian && step > 0.0) {
      const double sd = sigma * std::sqrt(step);
      for (int i = 0; i < d; ++i) pos[i] += sd * s.gauss.next_normal();
      check_exit(std::min(next, config.horizon));
    }
    if (next > config.horizon) break;
    clock = next;

    const int axis = static_cast<int>(s.axes.next_index(d));
    const double v = s.mags.next_unit();
    const double mag = tail.quantile(v);
    const double jump = s.signs.next_sign_negative() ? -mag : mag;
    bool accepted = true;
    if (thinned) {
      const double lam = config.kernel.multiplier.axis_jump(
          std::span<const double>(pos, d), axis, jump);
      accepted = s.thin.next_unit() <= lam / config.kernel.lambda_bound;
    }
    if (accepted) {
      pos[axis] += jump;
      check_exit(clock);
    }
    if (next_radius >= radii.size()) break;  // all balls exited
  }
  for (int i = 0; i < d; ++i) rec.terminal[i] = pos[i];
  return rec;
}

double exact_stable_sample(double alpha, double scale_c, rng::Stream& stream) {
  require(alpha > 0.0 && alpha < 2.0, "stable: alpha must be in (0,2)");
  require(scale_c > 0.0, "stable: scale must be positive");
  const double half_pi = 1.5707963267948966;
  const double v = half_pi * (2.0 * stream.next_unit() - 1.0);
  if (alpha == 1.0) return scale_c * std::tan(v);
  double w = stream.next_exp();
  const double scale = std::pow(scale_c, 1.0 / alpha);
  const double t1 = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha);
  const double t2 =
      std::pow(std::cos(v * (1.0 - alpha)) / w, (1.0 - alpha) / alpha);
  return scale * t1 * t2;
}

double stable_exponent_constant(double alpha) {
  require(alpha > 0.0 && alpha < 2.0, "stable: alpha must be in (0,2)");
  // 2 int_0^inf (1-cos u) u^{-1-alpha} du. The integrable singularity at
  // zero is closed with the series of 1-cos to u^8 on [0, delta]; the
  // body runs over full periods so the oscillatory remainder of the tail
  // is O(A^-2), and the 1-term tail is closed exactly.
  const double delta = 0.1;
  double head = 0.0;
  double sign = 1.0, factorial = 2.0;
  for (int k = 1; k <= 4; ++k) {
    const double power = 2.0 * k - alpha;
    head += sign * std::pow(delta, power) / (factorial * power);
    sign = -sign;
    factorial *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
  }
  const auto f = [alpha](double u) {
    return (1.0 - std::cos(u)) * std::pow(u, -1.0 - alpha);
  };
  const double two_pi = 6.283185307179586;
  double body = integrate_gk(f, delta, two_pi, 1e-12);
  const int periods = 20000;
  for (int m = 1; m < periods; ++m)
    body += integrate_gk(f, two_pi * m, two_pi * (m + 1), 1e-12);
  const double a_end = two_pi * periods;
  return 2.0 * (head + body + std::pow(a_end, -alpha) / alpha);
}

PathSample rescale_path(const PathSample& path, double kappa,
                        const ScalingFunction& phi) {
  require(kappa > 0.0, "rescale_path: kappa must be positive");
  const double time_div = phi(kappa);
  PathSample out = path;
  for (auto& e : out.events) {
    e.time /= time_div;
    e.jump /= kappa;
  }
  for (auto& c : out.terminal) c /= kappa;
  return out;
}

}  // namespace aniso
