#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "aniso/kernels.hpp"
#include "aniso/rng.hpp"
#include "aniso/scaling.hpp"
#include "aniso/simulate.hpp"
#include "aniso/verify.hpp"

using aniso::KernelSpec;
using aniso::Multiplier;
using aniso::PathSample;
using aniso::ScalingFunction;
using aniso::SimConfig;
using aniso::SmallJumpMode;
using aniso::TailSampler;

namespace {

SimConfig basic_config(int dim, double eps, double horizon,
                       SmallJumpMode mode = SmallJumpMode::kDrop) {
  SimConfig cfg;
  cfg.kernel.phi = ScalingFunction::power_law(1.0);
  cfg.kernel.dim = dim;
  cfg.kernel.lambda_bound = 1.0;
  cfg.kernel.multiplier = Multiplier::constant(1.0);
  cfg.eps = eps;
  cfg.horizon = horizon;
  cfg.small_jump_mode = mode;
  cfg.n_paths = 1;
  cfg.base_seed = 424242;
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("simulate");

TEST_CASE("counter rng: streams are independent of draw interleaving") {
  aniso::rng::Stream a(1, 2, 3), b(1, 2, 3);
  std::vector<std::uint64_t> ours;
  for (int i = 0; i < 16; ++i) ours.push_back(a.next_u64());
  for (int i = 0; i < 16; ++i) CHECK(b.next_u64() == ours[i]);
  aniso::rng::Stream c(1, 2, 4);
  CHECK(c.next_u64() != ours[0]);

  // Poisson sanity: mean and variance near the target.
  aniso::rng::Stream p(7, 0, 0);
  const double mean = 83.7;
  double s1 = 0.0, s2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(p.next_poisson(mean));
    s1 += k;
    s2 += k * k;
  }
  const double m = s1 / n, var = s2 / n - m * m;
  CHECK(m == doctest::Approx(mean).epsilon(0.01));
  CHECK(var == doctest::Approx(mean).epsilon(0.05));
}

TEST_CASE("no jumps above a huge cutoff: path stays at the start") {
  SimConfig cfg = basic_config(2, 1e7, 1.0);
  const TailSampler tail(cfg.kernel.phi, cfg.eps);
  const std::vector<double> start{3.0, -1.0};
  const PathSample path = aniso::sample_z_path(cfg, tail, 0, start);
  CHECK(path.events.empty());
  CHECK(path.terminal[0] == 3.0);
  CHECK(path.terminal[1] == -1.0);
}

TEST_CASE("reproducibility: bit-identical paths for equal inputs") {
  SimConfig cfg = basic_config(2, 0.05, 1.0, SmallJumpMode::kGaussian);
  const TailSampler tail(cfg.kernel.phi, cfg.eps);
  const PathSample a = aniso::sample_z_path(cfg, tail, 5);
  const PathSample b = aniso::sample_z_path(cfg, tail, 5);
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    CHECK(a.events[i].time == b.events[i].time);
    CHECK(a.events[i].jump == b.events[i].jump);
    CHECK(a.events[i].axis == b.events[i].axis);
  }
  CHECK(a.terminal == b.terminal);
  const PathSample c = aniso::sample_z_path(cfg, tail, 6);
  CHECK(a.terminal != c.terminal);
}

TEST_CASE("path invariants: times increasing, jumps above cutoff, terminal sum") {
  SimConfig cfg = basic_config(2, 0.02, 2.0, SmallJumpMode::kDrop);
  const TailSampler tail(cfg.kernel.phi, cfg.eps);
  for (std::uint64_t p = 0; p < 50; ++p) {
    const PathSample path = aniso::sample_z_path(cfg, tail, p);
    double prev = 0.0;
    std::vector<double> sum(2, 0.0);
    for (const auto& e : path.events) {
      CHECK(e.time > prev);
      CHECK(e.time <= cfg.horizon);
      prev = e.time;
      CHECK(std::fabs(e.jump) >= cfg.eps);
      if (e.accepted) sum[e.axis] += e.jump;
    }
    CHECK(path.terminal[0] == doctest::Approx(sum[0]).epsilon(1e-12));
    CHECK(path.terminal[1] == doctest::Approx(sum[1]).epsilon(1e-12));
    CHECK(path.n_proposed == path.events.size());
  }
}

TEST_CASE("coordinate independence: terminal correlation near zero") {
  SimConfig cfg = basic_config(2, 0.05, 1.0, SmallJumpMode::kGaussian);
  const TailSampler tail(cfg.kernel.phi, cfg.eps);
  const int n = 10000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  int used = 0;
  double out[2];
  for (int p = 0; p < n; ++p) {
    aniso::sample_terminal(cfg, tail, false, p, {}, out);
    // Heavy tails: correlate a bounded transform instead of raw values.
    const double x = std::atan(out[0]), y = std::atan(out[1]);
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
    ++used;
  }
  const double corr = (sxy / used - sx / used * sy / used) /
                      std::sqrt((sxx / used - sx / used * sx / used) *
                                (syy / used - sy / used * sy / used));
  CHECK(std::fabs(corr) < 0.03);
}

TEST_CASE("stable sampler: median, spread, and exponent constant") {
  aniso::rng::Stream g(99, 0, 0);
  std::vector<double> draws(200000);
  for (auto& d : draws) d = aniso::exact_stable_sample(1.0, 1.0, g);
  std::nth_element(draws.begin(), draws.begin() + draws.size() / 2,
                   draws.end());
  CHECK(std::fabs(draws[draws.size() / 2]) < 0.01);

  // Standard Cauchy quartiles at +-1.
  std::nth_element(draws.begin(), draws.begin() + draws.size() / 4,
                   draws.end());
  CHECK(draws[draws.size() / 4] == doctest::Approx(-1.0).epsilon(0.02));

  CHECK_THROWS_AS(aniso::exact_stable_sample(2.0, 1.0, g),
                  std::invalid_argument);

  // Quadrature vs closed forms of the Levy exponent constant.
  CHECK(aniso::stable_exponent_constant(1.0) ==
        doctest::Approx(3.14159265358979).epsilon(1e-6));
  const auto closed = [](double a) {
    return 2.0 * std::cos(1.5707963267948966 * a) * std::tgamma(2.0 - a) /
           (a * (1.0 - a));
  };
  CHECK(aniso::stable_exponent_constant(0.5) ==
        doctest::Approx(closed(0.5)).epsilon(1e-6));
  CHECK(aniso::stable_exponent_constant(1.5) ==
        doctest::Approx(closed(1.5)).epsilon(1e-6));
}

TEST_CASE("z terminal law matches the exact stable oracle (unit-scale run)") {
  // alpha = 1: coordinate law at t is Cauchy with scale pi t.
  SimConfig cfg = basic_config(1, 2e-4, 1.0, SmallJumpMode::kGaussian);
  const TailSampler tail(cfg.kernel.phi, cfg.eps);
  const int n = 20000;
  std::vector<double> sim(n);
  double out[1];
  for (int p = 0; p < n; ++p) {
    aniso::sample_terminal(cfg, tail, false, p, {}, out);
    sim[p] = out[0];
  }
  const double scale = 3.141592653589793;
  const double ks = aniso::ks_statistic(std::move(sim), [scale](double x) {
    return 0.5 + std::atan(x / scale) / 3.141592653589793;
  });
  CHECK(ks < 0.02);
}

TEST_CASE("thinning: degenerate lambda reproduces z, acceptance rate c/Lambda") {
  SUBCASE("Lambda = 1, constant multiplier: same law as z") {
    SimConfig cfg = basic_config(1, 0.01, 1.0, SmallJumpMode::kDrop);
    const TailSampler tail(cfg.kernel.phi, cfg.eps);
    const int n = 30000;
    std::vector<double> z(n), x(n);
    double out[1];
    for (int p = 0; p < n; ++p) {
      aniso::sample_terminal(cfg, tail, false, p, {}, out);
      z[p] = out[0];
      aniso::sample_terminal(cfg, tail, true, p + n, {}, out);
      x[p] = out[0];
    }
    CHECK(aniso::ks_two_sample(std::move(z), std::move(x)) < 0.02);
  }
  SUBCASE("constant c below Lambda: Bernoulli acceptance at rate c/Lambda") {
    SimConfig cfg = basic_config(1, 0.001, 1.0, SmallJumpMode::kDrop);
    cfg.kernel.lambda_bound = 2.0;
    cfg.kernel.multiplier = Multiplier::constant(0.5);
    const TailSampler tail(cfg.kernel.phi, cfg.eps);
    std::uint64_t proposed = 0, accepted = 0;
    for (std::uint64_t p = 0; p < 300; ++p) {
      const PathSample path = aniso::sample_x_path(cfg, tail, p);
      proposed += path.n_proposed;
      accepted += path.n_accepted;
    }
    REQUIRE(proposed > 1000000);
    const double rate = static_cast<double>(accepted) /
                        static_cast<double>(proposed);
    CHECK(rate == doctest::Approx(0.25).epsilon(0.02));
  }
}

TEST_CASE("thinning follows the local multiplier (chi-square by cell parity)") {
  SimConfig cfg = basic_config(1, 0.01, 1.0, SmallJumpMode::kDrop);
  cfg.kernel.lambda_bound = 2.0;
  cfg.kernel.multiplier = Multiplier::checkerboard(1.0, 0.5, 1.5);
  const TailSampler tail(cfg.kernel.phi, cfg.eps);

  // Bucket proposals by the parity cell of the jump midpoint; acceptance
  // rates must match lambda/Lambda = 0.25 and 0.75.
  std::uint64_t acc[2] = {0, 0}, tot[2] = {0, 0};
  for (std::uint64_t p = 0; p < 2000; ++p) {
    const PathSample path = aniso::sample_x_path(cfg, tail, p);
    double pos = 0.0;
    for (const auto& e : path.events) {
      const double mid = pos + 0.5 * e.jump;
      const int bucket =
          static_cast<int>(static_cast<long long>(std::floor(mid)) & 1);
      ++tot[bucket];
      if (e.accepted) {
        ++acc[bucket];
        pos += e.jump;
      }
    }
  }
  const double expect[2] = {0.25, 0.75};
  double chi2 = 0.0;
  for (int b = 0; b < 2; ++b) {
    const double e_acc = expect[b] * static_cast<double>(tot[b]);
    const double e_rej = (1.0 - expect[b]) * static_cast<double>(tot[b]);
    chi2 += (acc[b] - e_acc) * (acc[b] - e_acc) / e_acc;
    chi2 += (tot[b] - acc[b] - e_rej) * (tot[b] - acc[b] - e_rej) / e_rej;
  }
  CHECK(chi2 < 9.21);  // chi-square(2) at the 1% level
}

TEST_CASE("accepted jump magnitudes follow the normalized tail law") {
  SimConfig cfg = basic_config(1, 0.1, 1.0, SmallJumpMode::kDrop);
  const TailSampler tail(cfg.kernel.phi, cfg.eps);
  std::vector<double> magnitudes;
  magnitudes.reserve(120000);
  for (std::uint64_t p = 0; magnitudes.size() < 100000; ++p) {
    const PathSample path = aniso::sample_z_path(cfg, tail, p);
    for (const auto& e : path.events) magnitudes.push_back(std::fabs(e.jump));
  }
  magnitudes.resize(100000);
  const double n_eps = 1.0 / cfg.eps;  // analytic N for alpha = 1
  const double ks = aniso::ks_statistic(std::move(magnitudes), [&](double s) {
    return 1.0 - (1.0 / s) / n_eps;
  });
  CHECK(ks < 0.01);
}

TEST_CASE("sign-flip symmetry of terminals under an even multiplier") {
  SimConfig cfg = basic_config(2, 0.01, 1.0, SmallJumpMode::kDrop);
  cfg.kernel.lambda_bound = 2.0;
  cfg.kernel.multiplier = Multiplier::checkerboard(1.0, 0.5, 2.0);
  const TailSampler tail(cfg.kernel.phi, cfg.eps);
  const int n = 20000;
  std::vector<double> plus(n), minus(n);
  double out[2];
  for (int p = 0; p < n; ++p) {
    aniso::sample_terminal(cfg, tail, true, p, {}, out);
    plus[p] = out[0];
    aniso::sample_terminal(cfg, tail, true, p + n, {}, out);
    minus[p] = -out[0];
  }
  CHECK(aniso::ks_two_sample(std::move(plus), std::move(minus)) < 0.015);
}

TEST_CASE("rescale_path: exact scaling and self-similarity in law") {
  SimConfig cfg = basic_config(1, 0.01, 1.0, SmallJumpMode::kDrop);
  const TailSampler tail(cfg.kernel.phi, cfg.eps);
  const PathSample path = aniso::sample_z_path(cfg, tail, 3);

  SUBCASE("identity at kappa = 1 for phi(1) = 1") {
    const PathSample same = aniso::rescale_path(path, 1.0, cfg.kernel.phi);
    CHECK(same.terminal == path.terminal);
    for (std::size_t i = 0; i < path.events.size(); ++i)
      CHECK(same.events[i].time == path.events[i].time);
  }
  SUBCASE("jump sizes divide by kappa exactly") {
    const PathSample scaled = aniso::rescale_path(path, 4.0, cfg.kernel.phi);
    for (std::size_t i = 0; i < path.events.size(); ++i) {
      CHECK(scaled.events[i].jump == path.events[i].jump / 4.0);
      CHECK(scaled.events[i].time == path.events[i].time / 4.0);  // phi(4)=4
    }
  }
  SUBCASE("self-similar law: rescaled run matches a unit run") {
    // kappa-scaled process sampled to horizon phi(kappa), rescaled,
    // against a direct horizon-1 run with the matching cutoff.
    const double kappa = 2.0;
    SimConfig big = basic_config(1, 0.01 * kappa, kappa /* phi(kappa)*1 */,
                                 SmallJumpMode::kDrop);
    const TailSampler big_tail(big.kernel.phi, big.eps);
    const int n = 20000;
    std::vector<double> a(n), b(n);
    double out[1];
    for (int p = 0; p < n; ++p) {
      const PathSample long_path = aniso::sample_z_path(big, big_tail, p);
      a[p] = aniso::rescale_path(long_path, kappa, big.kernel.phi).terminal[0];
      aniso::sample_terminal(cfg, tail, false, p + 7 * n, {}, out);
      b[p] = out[0];
    }
    CHECK(aniso::ks_two_sample(std::move(a), std::move(b)) < 0.015);
  }
}

TEST_CASE("exit records: drop mode detects exits at jump times") {
  SimConfig cfg = basic_config(1, 0.01, 50.0, SmallJumpMode::kDrop);
  const TailSampler tail(cfg.kernel.phi, cfg.eps);
  const std::vector<double> radii{1.0, 2.0, 4.0};
  for (std::uint64_t p = 0; p < 200; ++p) {
    const auto rec = aniso::sample_exit(cfg, tail, false, p, {}, radii);
    double prev = 0.0;
    for (std::size_t j = 0; j < radii.size(); ++j) {
      CHECK(rec.exit_time[j] >= prev);  // nested balls exit in order
      prev = rec.exit_time[j];
    }
  }
}

TEST_CASE("vector terminal engines match the scalar engine bitwise") {
  SimConfig probe = basic_config(2, 1e-3, 1.0, SmallJumpMode::kGaussian);
  const int max_width = aniso::terminal_batch_width(probe);
  if (max_width == 0) return;  // scalar-only target
  for (const int width : {4, max_width}) {
    const auto batch = width == 8 ? aniso::sample_terminal_batch8
                                  : aniso::sample_terminal_batch4;
    for (const bool thinned : {false, true}) {
      for (const auto mode : {SmallJumpMode::kDrop, SmallJumpMode::kGaussian}) {
        for (const int d : {1, 2}) {
          SimConfig local = basic_config(d, 1e-3, 1.0, mode);
          if (thinned) {
            local.kernel.lambda_bound = 2.0;
            local.kernel.multiplier = Multiplier::checkerboard(1.0, 0.5, 2.0);
          }
          const TailSampler tail(local.kernel.phi, local.eps);
          const std::vector<double> start(d, 0.25);
          double rows[16];
          double ref[8];
          for (std::uint64_t base = 0; base < 32;
               base += static_cast<std::uint64_t>(width)) {
            batch(local, tail, thinned, base, start, rows);
            for (int l = 0; l < width; ++l) {
              aniso::sample_terminal(local, tail, thinned, base + l, start,
                                     std::span<double>(ref, d));
              for (int a = 0; a < d; ++a) {
                CHECK(rows[l * d + a] == ref[a]);  // bitwise
              }
            }
          }
        }
      }
    }
  }
}

TEST_CASE("config validation") {
  SimConfig cfg = basic_config(1, 1e-9, 10.0);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // rate overflow
  cfg = basic_config(1, 0.1, 1.0);
  cfg.eps = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = basic_config(1, 0.1, 1.0);
  cfg.kernel.truncation = 5.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_SUITE_END();
