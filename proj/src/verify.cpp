#include "aniso/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "aniso/kernels.hpp"

namespace aniso {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kPass:
      return "PASS";
    case Verdict::kFail:
      return "FAIL";
    case Verdict::kInconclusive:
      return "INCONCLUSIVE";
  }
  return "?";
}

DensityHistogram::DensityHistogram(int dim, std::span<const double> center,
                                   double half_width, double bin_width)
    : dim_(dim), bin_width_(bin_width) {
  if (dim < 1 || static_cast<int>(center.size()) != dim)
    throw std::invalid_argument("histogram: bad dimension");
  if (!(half_width > 0.0) || !(bin_width > 0.0) || bin_width > 2.0 * half_width)
    throw std::invalid_argument("histogram: degenerate grid");
  bins_ = static_cast<int>(std::round(2.0 * half_width / bin_width));
  if (bins_ < 1 || std::pow(static_cast<double>(bins_), dim) > 5e7)
    throw std::invalid_argument("histogram: grid too large");
  lo_.assign(center.begin(), center.end());
  for (auto& c : lo_) c -= half_width;
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(bins_);
  counts_.assign(total, 0);
}

void DensityHistogram::add(std::span<const double> point) {
  ++n_samples_;
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a) {
    const double u = (point[a] - lo_[a]) / bin_width_;
    if (u < 0.0 || u >= static_cast<double>(bins_)) {
      ++overflow_;
      return;
    }
    flat = flat * bins_ + static_cast<std::size_t>(u);
  }
  ++counts_[flat];
}

void DensityHistogram::merge(const DensityHistogram& other) {
  if (other.counts_.size() != counts_.size())
    throw std::invalid_argument("histogram: merge shape mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  overflow_ += other.overflow_;
  n_samples_ += other.n_samples_;
}

std::uint64_t DensityHistogram::count_at(std::span<const int> cell) const {
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a) flat = flat * bins_ + cell[a];
  return counts_[flat];
}

std::vector<double> DensityHistogram::cell_center(
    std::span<const int> cell) const {
  std::vector<double> c(dim_);
  for (int a = 0; a < dim_; ++a)
    c[a] = lo_[a] + (cell[a] + 0.5) * bin_width_;
  return c;
}

double DensityHistogram::bin_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= bin_width_;
  return v;
}

double DensityHistogram::density_at(std::span<const int> cell) const {
  return static_cast<double>(count_at(cell)) /
         (static_cast<double>(n_samples_) * bin_volume());
}

void DensityHistogram::for_each_cell(
    const std::function<void(std::span<const int>, std::uint64_t)>& f) const {
  std::vector<int> cell(dim_, 0);
  for (std::size_t flat = 0; flat < counts_.size(); ++flat) {
    std::size_t rem = flat;
    for (int a = dim_ - 1; a >= 0; --a) {
      cell[a] = static_cast<int>(rem % bins_);
      rem /= bins_;
    }
    f(cell, counts_[flat]);
  }
}

RatioReport envelope_ratio_report(const DensityHistogram& hist, double t,
                                  std::span<const double> start,
                                  const ScalingFunction& phi,
                                  std::uint64_t trust_count,
                                  double spread_limit) {
  if (!(t > 0.0)) throw std::invalid_argument("ratio report: t must be > 0");
  const int d = hist.dim();
  const double rho = phi.inverse(t);

  RatioReport report;
  report.trust_count = trust_count;
  report.tail_covered.assign(d, false);
  report.c1 = std::numeric_limits<double>::infinity();
  report.c2 = 0.0;

  hist.for_each_cell([&](std::span<const int> cell, std::uint64_t count) {
    if (count < trust_count) return;
    const std::vector<double> center = hist.cell_center(cell);
    const EnvelopeValue env = envelope_x(t, center, start, phi);
    RatioCell rc;
    rc.cell.assign(cell.begin(), cell.end());
    rc.count = count;
    rc.density = hist.density_at(cell);
    rc.envelope = env.value;
    rc.ratio = rc.density / env.value;
    bool near = true;
    for (int a = 0; a < d; ++a) {
      const double off = std::fabs(center[a] - start[a]);
      rc.center_offset_max = std::max(rc.center_offset_max, off);
      if (off > rho) near = false;
      if (off >= 3.0 * rho) report.tail_covered[a] = true;
    }
    if (near) report.near_diagonal_covered = true;
    report.c1 = std::min(report.c1, rc.ratio);
    report.c2 = std::max(report.c2, rc.ratio);
    report.cells.push_back(std::move(rc));
  });

  if (report.cells.empty()) {
    report.verdict = Verdict::kInconclusive;
    report.note = "no trusted cells";
    return report;
  }
  bool covered = report.near_diagonal_covered;
  for (const bool b : report.tail_covered) covered = covered && b;
  if (!covered) {
    report.verdict = Verdict::kInconclusive;
    report.note = "trusted cells do not span near-diagonal and tails";
    return report;
  }
  report.spread = report.c2 / report.c1;
  const bool ok = report.c1 > 0.0 && std::isfinite(report.c2) &&
                  report.spread <= spread_limit;
  report.verdict = ok ? Verdict::kPass : Verdict::kFail;
  if (!ok) report.note = "ratio spread exceeds limit";
  return report;
}

WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t trials) {
  WilsonInterval w;
  if (trials == 0) return w;
  const double z = 1.959963984540054;  // 95%
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  w.estimate = p;
  w.lo = hits == 0 ? 0.0 : std::max(0.0, center - half);
  w.hi = hits == trials ? 1.0 : std::min(1.0, center + half);
  return w;
}

ExitTailReport exit_tail_report(std::span<const ExitTailRow> rows) {
  ExitTailReport report;
  report.rows.assign(rows.begin(), rows.end());
  if (rows.empty()) {
    report.note = "no rows";
    return report;
  }
  for (const auto& row : rows) {
    if (row.exits == 0 && row.radius_rel == rows.back().radius_rel) {
      report.verdict = Verdict::kInconclusive;
      report.note = "no exits observed at the largest radius";
      return report;
    }
    report.sup_normalized = std::max(report.sup_normalized, row.normalized);
  }
  if (!std::isfinite(report.sup_normalized)) {
    report.verdict = Verdict::kFail;
    report.note = "normalized exit bound diverged";
    return report;
  }
  // Boundedness at desk scale: the normalized quantity rises out of the
  // saturated small-r regime, so growth is judged at the tail of the
  // grid. It must have stopped growing there (up to CI width), and the
  // largest-r CI upper bound must stay within 2x the preceding value.
  if (rows.size() >= 2) {
    const auto& last = rows.back();
    const auto& prev = rows[rows.size() - 2];
    const double allowed = 1.25 * prev.normalized + last.normalized_width +
                           prev.normalized_width;
    if (last.normalized > allowed) {
      report.verdict = Verdict::kFail;
      report.note = "normalized exit bound still growing at the largest radius";
      return report;
    }
    if (last.normalized_hi > 2.0 * prev.normalized) {
      report.verdict = Verdict::kFail;
      report.note = "largest-radius CI bound above 2x the preceding value";
      return report;
    }
  }
  report.verdict = Verdict::kPass;
  return report;
}

MeanExitReport mean_exit_report(double radius, double phi_r,
                                std::span<const double> exit_times,
                                double horizon) {
  MeanExitReport report;
  report.radius = radius;
  report.phi_r = phi_r;
  report.n_paths = exit_times.size();
  if (exit_times.empty()) {
    report.note = "no paths";
    return report;
  }
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (const double tau : exit_times) {
    if (!(tau < horizon)) {
      ++report.censored;
      continue;
    }
    sum += tau;
    sum2 += tau * tau;
    sum4 += tau * tau * tau * tau;
  }
  const double n = static_cast<double>(report.n_paths - report.censored);
  if (n < 2.0) {
    report.note = "all paths censored";
    return report;
  }
  report.mean = sum / n;
  report.second = sum2 / n;
  const double var1 = std::max(0.0, sum2 / n - report.mean * report.mean);
  const double var2 = std::max(0.0, sum4 / n - report.second * report.second);
  report.mean_ci = 1.96 * std::sqrt(var1 / n);
  report.second_ci = 1.96 * std::sqrt(var2 / n);
  report.mean_ratio = report.mean / phi_r;
  report.second_ratio = report.second / (phi_r * phi_r);
  const double censored_frac =
      static_cast<double>(report.censored) / static_cast<double>(report.n_paths);
  if (censored_frac > 0.01) {
    report.verdict = Verdict::kInconclusive;
    report.note = "more than 1% of paths not exited by the horizon";
  } else {
    report.verdict = Verdict::kPass;
  }
  return report;
}

DiagReport diag_report(std::span<const DiagPoint> points, int dim,
                       std::uint64_t trust_count) {
  DiagReport report;
  report.points.assign(points.begin(), points.end());
  if (points.size() < 2) {
    report.note = "need at least two time points";
    return report;
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& p : points) {
    if (p.hits < trust_count) {
      report.verdict = Verdict::kInconclusive;
      report.note = "insufficient counts in the near-diagonal cell";
      return report;
    }
    lo = std::min(lo, p.normalized);
    hi = std::max(hi, p.normalized);
  }
  report.normalized_spread = hi / lo;

  // Weighted least squares of log density on log t; weights from the
  // per-point multinomial standard error 1/sqrt(hits).
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const double w = static_cast<double>(p.hits);
    const double x = std::log(p.t);
    const double y = std::log(p.density);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  const double denom = sw * sxx - sx * sx;
  report.slope = (sw * sxy - sx * sy) / denom;
  report.slope_stderr = std::sqrt(sw / denom);
  report.verdict =
      (report.normalized_spread <= 100.0) ? Verdict::kPass : Verdict::kFail;
  if (report.verdict == Verdict::kFail)
    report.note = "normalized on-diagonal level spread exceeds 100";
  (void)dim;
  return report;
}

double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na -
                              static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace aniso
