#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aniso/scaling.hpp"

namespace aniso {

enum class Verdict { kPass, kFail, kInconclusive };

std::string to_string(Verdict v);

// Axis-aligned histogram over a cube centered at `center`, with an
// explicit overflow bucket so total mass is conserved exactly.
class DensityHistogram {
 public:
  DensityHistogram(int dim, std::span<const double> center, double half_width,
                   double bin_width);

  void add(std::span<const double> point);
  void merge(const DensityHistogram& other);  // counts add; exact

  int dim() const { return dim_; }
  int bins_per_axis() const { return bins_; }
  double bin_width() const { return bin_width_; }
  std::uint64_t n_samples() const { return n_samples_; }
  std::uint64_t overflow() const { return overflow_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  std::uint64_t count_at(std::span<const int> cell) const;
  // Center of a cell, and the density estimate count/(n * bin volume).
  std::vector<double> cell_center(std::span<const int> cell) const;
  double density_at(std::span<const int> cell) const;
  double bin_volume() const;

  // Iterates all cells: f(cell_indices, count).
  void for_each_cell(
      const std::function<void(std::span<const int>, std::uint64_t)>& f) const;

 private:
  int dim_ = 1;
  int bins_ = 0;
  double bin_width_ = 0.0;
  std::vector<double> lo_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t overflow_ = 0;
  std::uint64_t n_samples_ = 0;
};

struct RatioCell {
  std::vector<int> cell;
  double center_offset_max = 0.0;  // max_i |center_i - start_i|
  double density = 0.0;
  double envelope = 0.0;
  double ratio = 0.0;
  std::uint64_t count = 0;
};

struct RatioReport {
  std::vector<RatioCell> cells;    // trusted cells only
  double c1 = 0.0;                 // min ratio over trusted cells
  double c2 = 0.0;                 // max ratio
  double spread = 0.0;             // c2/c1
  std::uint64_t trust_count = 0;   // trust threshold used
  bool near_diagonal_covered = false;
  std::vector<bool> tail_covered;  // per axis
  Verdict verdict = Verdict::kInconclusive;
  std::string note;
};

// Ratio of empirical density to the closed-form envelope at trusted cell
// centers. PASS needs finite 0 < c1 <= c2 with c2/c1 <= 200 and trusted
// cells spanning the near-diagonal cell and, per axis, at least one cell
// with |center_i - start_i| >= 3 phi^{-1}(t).
RatioReport envelope_ratio_report(const DensityHistogram& hist, double t,
                                  std::span<const double> start,
                                  const ScalingFunction& phi,
                                  std::uint64_t trust_count = 300,
                                  double spread_limit = 200.0);

struct WilsonInterval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// 95% Wilson score interval for a binomial proportion.
WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t trials);

struct ExitTailRow {
  double radius_rel = 0.0;      // r, in units of phi^{-1}(t)
  std::uint64_t exits = 0;
  std::uint64_t trials = 0;
  WilsonInterval prob;          // P[tau < t]
  double normalized = 0.0;      // p * phi(phi^{-1}(t) r) / t
  double normalized_hi = 0.0;   // CI upper bound of the same quantity
  double normalized_width = 0.0;
};

struct ExitTailReport {
  std::vector<ExitTailRow> rows;
  double sup_normalized = 0.0;
  Verdict verdict = Verdict::kInconclusive;
  std::string note;
};

// Boundedness of the exit-tail estimate: the normalized quantity must be
// finite, must not increase along r by more than the CI width, and the
// largest-r CI upper bound must stay below 2x the smallest-r value.
ExitTailReport exit_tail_report(std::span<const ExitTailRow> rows);

struct MeanExitReport {
  double radius = 0.0;
  double phi_r = 0.0;
  std::uint64_t n_paths = 0;
  std::uint64_t censored = 0;      // not exited by the horizon
  double mean = 0.0, mean_ci = 0.0;
  double second = 0.0, second_ci = 0.0;
  double mean_ratio = 0.0;         // E[tau]/phi(r)
  double second_ratio = 0.0;       // E[tau^2]/phi(r)^2
  Verdict verdict = Verdict::kInconclusive;
  std::string note;
};

// Sample-mean report for exit times of one ball; inconclusive when more
// than 1% of paths were censored by the horizon.
MeanExitReport mean_exit_report(double radius, double phi_r,
                                std::span<const double> exit_times,
                                double horizon);

struct DiagPoint {
  double t = 0.0;
  double kappa = 0.0;           // phi^{-1}(t)
  std::uint64_t hits = 0;       // paths in the near-diagonal cell
  std::uint64_t trials = 0;
  double density = 0.0;         // hits / (n * cell volume)
  double normalized = 0.0;      // density * kappa^d
};

struct DiagReport {
  std::vector<DiagPoint> points;
  double slope = 0.0;           // log density vs log t
  double slope_stderr = 0.0;
  double normalized_spread = 0.0;
  Verdict verdict = Verdict::kInconclusive;
  std::string note;
};

// Near-diagonal scaling: least-squares slope of log density against
// log t, and the spread of density * kappa^d. PASS needs every point
// trusted (>= trust_count hits) and spread <= 100.
DiagReport diag_report(std::span<const DiagPoint> points, int dim,
                       std::uint64_t trust_count = 300);

// Kolmogorov-Smirnov statistics; used by the statistical gates.
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace aniso
