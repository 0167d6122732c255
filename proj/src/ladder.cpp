#include "aniso/ladder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace aniso {
namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_exponents(double al, double au) {
  require(al > 0.0 && al <= au && au < 2.0,
          "ladder: need 0 < alpha_lower <= alpha_upper < 2");
}

}  // namespace

double theta_level(int dim, int level, int i0, double alpha_lower,
                   double alpha_upper) {
  check_exponents(alpha_lower, alpha_upper);
  require(dim >= 1 && level >= 0 && level <= dim - 1, "theta_level: bad level");
  require(i0 >= 1 && i0 <= dim - level, "theta_level: bad i0");
  if (i0 == dim - level) return alpha_lower / (alpha_lower + 1.0);
  const double base = (alpha_upper + 1.0) / alpha_lower;
  double sum = 0.0, pow_i = 1.0;
  for (int i = 1; i <= dim - level - i0; ++i) {
    pow_i *= base;
    sum += pow_i;
  }
  return alpha_lower / (2.0 + alpha_lower + alpha_upper) / sum;
}

ThetaTable theta_table(int dim, double alpha_lower, double alpha_upper) {
  check_exponents(alpha_lower, alpha_upper);
  require(dim >= 1, "theta_table: dim must be >= 1");
  ThetaTable t;
  t.dim = dim;
  t.alpha_lower = alpha_lower;
  t.alpha_upper = alpha_upper;
  t.b0 = alpha_lower / (alpha_lower + 1.0);
  t.k0 = (alpha_lower + 1.0) / (alpha_upper + 1.0);
  t.threshold = 1.0 / (1.0 + alpha_lower);
  for (int l = 0; l < dim; ++l) {
    const double th = (l == dim - 1)
                          ? t.b0
                          : theta_level(dim, l, 1, alpha_lower, alpha_upper);
    t.theta.push_back(th);
    t.steps.push_back(static_cast<int>(std::ceil(t.threshold / th - 1e-12)));
  }
  return t;
}

std::vector<LadderStep> ladder_schedule(int dim, double alpha_lower,
                                        double alpha_upper) {
  const ThetaTable table = theta_table(dim, alpha_lower, alpha_upper);
  const double threshold = table.threshold;
  const double tol = 1e-12;

  std::vector<LadderStep> out;
  out.push_back({{0.0, 0}, "on-diagonal bound"});
  int guard = 0;
  for (int l = 0; l < dim; ++l) {
    if (l > 0) out.push_back({{0.0, l}, "level jump"});
    double q = 0.0;
    const double theta = table.theta[l];
    const char* rule = (l == dim - 1) ? "q-step (top level)" : "q-step";
    // Advance past the threshold; a landing within tolerance of the
    // threshold does not count as crossing, so one extra step is taken.
    while (q <= threshold + tol) {
      q = std::min(q + theta, 1.0);
      out.push_back({{q, l}, rule});
      if (++guard > 10000)
        throw std::runtime_error("ladder_schedule: did not terminate");
      if (q >= 1.0 - tol) break;
    }
  }
  if (out.back().state.q < 1.0 - tol)
    out.push_back({{1.0, dim - 1}, "final upgrade"});
  out.back().state.q = 1.0;
  out.back().state.level = dim - 1;
  return out;
}

double frakN(long long delta, double kappa, const ScalingFunction& phi) {
  require(kappa > 0.0, "frakN: kappa must be positive");
  const double two_delta = std::ldexp(1.0, static_cast<int>(delta));
  return phi(kappa) / (two_delta * phi(two_delta * kappa));
}

FrakNBoundsReport frakN_bounds_check(const ScalingFunction& phi,
                                     std::span<const double> kappas,
                                     int delta_max) {
  require(delta_max >= 0, "frakN_bounds_check: delta_max must be >= 0");
  const WsCertificate& cert = phi.certificate();
  const double c = cert.c_upper / cert.c_lower;
  FrakNBoundsReport report;
  for (const double kappa : kappas) {
    for (long long delta = 0; delta <= delta_max; ++delta) {
      ++report.n_checked;
      const double v = frakN(delta, kappa, phi);
      const double lo =
          std::pow(2.0, -static_cast<double>(delta) * (cert.alpha_upper + 1.0)) / c;
      const double hi =
          c * std::pow(2.0, -static_cast<double>(delta) * (cert.alpha_lower + 1.0));
      const double slack = std::max(lo / v, v / hi);
      report.worst_slack = std::max(report.worst_slack, slack);
      if (slack > 1.0 + 1e-12) ++report.n_violations;
    }
  }
  return report;
}

GeometryContext geometry_context(std::span<const double> x0,
                                 std::span<const double> y0, double t,
                                 const ScalingFunction& phi) {
  require(t > 0.0, "geometry_context: t must be positive");
  require(x0.size() == y0.size() && !x0.empty(),
          "geometry_context: dimension mismatch");
  const int d = static_cast<int>(x0.size());

  GeometryContext ctx;
  ctx.t = t;
  ctx.kappa = phi.inverse(t);
  std::vector<double> gaps(d);
  for (int i = 0; i < d; ++i) gaps[i] = std::fabs(x0[i] - y0[i]);
  ctx.order.resize(d);
  std::iota(ctx.order.begin(), ctx.order.end(), 0);
  std::stable_sort(ctx.order.begin(), ctx.order.end(),
                   [&gaps](int a, int b) { return gaps[a] < gaps[b]; });

  ctx.i0 = d + 1;
  for (int rank = 0; rank < d; ++rank) {
    const double gap = gaps[ctx.order[rank]];
    if (gap == 0.0) {
      ctx.n.push_back(std::nullopt);
      ctx.radius.push_back(0.0);
      continue;
    }
    // 5/4 2^n kappa <= gap < 5/4 2^{n+1} kappa
    const long long n = static_cast<long long>(
        std::floor(std::log2(4.0 * gap / (5.0 * ctx.kappa))));
    ctx.n.push_back(n);
    ctx.radius.push_back(std::ldexp(ctx.kappa, static_cast<int>(n)));
    if (n >= 1 && ctx.i0 == d + 1) ctx.i0 = rank + 1;
  }
  return ctx;
}

BoxIndex box_index(std::span<const double> z, std::span<const double> y0,
                   double kappa) {
  require(kappa > 0.0, "box_index: kappa must be positive");
  require(z.size() == y0.size() && !z.empty(), "box_index: dimension mismatch");
  const int d = static_cast<int>(z.size());

  BoxIndex idx;
  idx.gamma.resize(d);
  idx.sign.resize(d);
  long long k = 0;
  for (int i = 0; i < d; ++i) {
    const double w = (z[i] - y0[i]) / kappa;
    const double aw = std::fabs(w);
    if (aw < 1.0) {
      idx.central = true;
      idx.gamma.clear();
      idx.sign.clear();
      idx.k = 0;
      return idx;
    }
    idx.gamma[i] = std::ilogb(aw);  // floor(log2 |w|), exact
    idx.sign[i] = w < 0.0 ? -1 : 1;
    k += idx.gamma[i];
  }
  if (k == 0) {
    // All coordinates in [1,2): the (-2,2)^d patch of the central cell.
    idx.central = true;
    idx.gamma.clear();
    idx.sign.clear();
    idx.k = 0;
    return idx;
  }
  idx.k = k;
  return idx;
}

std::uint64_t box_count(long long k, int dim) {
  require(k >= 1, "box_count: k must be >= 1 (k = 0 is the central cell)");
  require(dim >= 1, "box_count: dim must be >= 1");
  // 2^d * C(d+k-1, d-1), computed with overflow-safe running products.
  long double c = 1.0L;
  for (int i = 1; i <= dim - 1; ++i)
    c = c * static_cast<long double>(k + i) / static_cast<long double>(i);
  const long double total = std::ldexp(c, dim);
  require(total < 1.8e19L, "box_count: overflow");
  return static_cast<std::uint64_t>(std::llroundl(total));
}

CaseReport check_case_inequalities(int dim, int level, int i0,
                                   double alpha_lower, double alpha_upper,
                                   double q,
                                   std::span<const long long> n_values,
                                   double kappa, const ScalingFunction& phi) {
  check_exponents(alpha_lower, alpha_upper);
  require(dim >= 1 && level >= 0 && level <= dim - 1,
          "check_case_inequalities: bad level");
  require(i0 >= 1 && i0 <= dim - level, "check_case_inequalities: bad i0");
  const double threshold = 1.0 / (1.0 + alpha_lower);
  require(q >= 0.0 && q < threshold,
          "check_case_inequalities: q must be in [0, 1/(1+alpha_lower))");
  const int count = dim - level - i0 + 1;
  require(static_cast<int>(n_values.size()) == count,
          "check_case_inequalities: n must cover i0..d-l");
  for (int j = 0; j < count; ++j) {
    require(n_values[j] >= 1, "check_case_inequalities: n values must be >= 1");
    if (j > 0)
      require(n_values[j] >= n_values[j - 1],
              "check_case_inequalities: n must be nondecreasing");
  }

  const double b0 = alpha_lower / (alpha_lower + 1.0);
  const double theta = theta_level(dim, level, i0, alpha_lower, alpha_upper);
  // Partial sums T(a,b) of n over the (paper-indexed) range i0..d-l.
  const auto partial = [&](int a, int b) -> double {
    if (a > b) return 0.0;
    double s = 0.0;
    for (int j = a; j <= b; ++j) s += static_cast<double>(n_values[j - i0]);
    return s;
  };
  const int d_minus_l = dim - level;

  CaseReport report;
  report.theta = theta;
  report.j0 = -1;
  for (int j0 = i0; j0 <= d_minus_l - 1; ++j0) {
    const double bound =
        (static_cast<double>(n_values[j0 - i0]) * (alpha_lower + 1.0) * b0 -
         (alpha_upper + 1.0) * partial(i0, j0 - 1) * q) /
        ((alpha_upper + 1.0) * partial(i0, d_minus_l));
    if (theta <= bound) {
      report.case_id = 1;
      report.j0 = j0;
      break;
    }
  }
  if (report.case_id != 1) {
    report.case_id = 2;
    report.j0 = d_minus_l;
  }

  const auto frak = [&](int j) {
    return frakN(n_values[j - i0], kappa, phi);
  };
  const WsCertificate& cert = phi.certificate();
  const double c = std::pow(cert.c_upper / cert.c_lower, dim);

  double lhs = 1.0, rhs = 1.0;
  if (report.case_id == 1) {
    lhs = std::pow(frak(report.j0), b0 + q);
    for (int j = report.j0 + 1; j <= d_minus_l; ++j)
      lhs *= std::pow(frak(j), q);
  } else {
    lhs = std::pow(frak(d_minus_l), b0 + q);
  }
  for (int j = i0; j <= d_minus_l; ++j) rhs *= std::pow(frak(j), q + theta);
  rhs *= c;

  report.lhs = lhs;
  report.rhs = rhs;
  report.margin = rhs / lhs;
  report.holds = lhs <= rhs * (1.0 + 1e-9);
  return report;
}

}  // namespace aniso
