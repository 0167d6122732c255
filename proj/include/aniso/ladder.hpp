#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aniso/scaling.hpp"

namespace aniso {

// Exponent table driving the bootstrap upgrade schedule.
struct ThetaTable {
  int dim = 1;
  double alpha_lower = 0.0, alpha_upper = 0.0;
  std::vector<double> theta;    // theta_l for l in {0,...,d-1}
  std::vector<int> steps;       // N_l = inf{n : n theta_l >= 1/(1+al)}
  double b0 = 0.0;              // al/(al+1)
  double k0 = 0.0;              // (al+1)/(au+1)
  double threshold = 0.0;       // 1/(1+al)
};

ThetaTable theta_table(int dim, double alpha_lower, double alpha_upper);

// theta_l^{i0} used inside the case analysis; i0 ranges over {1,...,d-l}
// and the value is nondecreasing in i0, with min at i0 = 1 equal to the
// ThetaTable entry.
double theta_level(int dim, int level, int i0, double alpha_lower,
                   double alpha_upper);

// One state of the upgrade ladder.
struct LadderState {
  double q = 0.0;
  int level = 0;
};

struct LadderStep {
  LadderState state;
  std::string rule;  // which upgrade produced this state
};

// Full schedule from (0,0) to (1,d-1). Within a level q advances by
// theta_l until it strictly exceeds 1/(1+al); a landing exactly on the
// threshold takes one extra step (the hypotheses are open there).
std::vector<LadderStep> ladder_schedule(int dim, double alpha_lower,
                                        double alpha_upper);

// frakN(delta) = phi(kappa) / (2^delta phi(2^delta kappa)).
double frakN(long long delta, double kappa, const ScalingFunction& phi);

struct FrakNBoundsReport {
  std::size_t n_checked = 0;
  std::size_t n_violations = 0;
  double worst_slack = 0.0;  // max of bound/value and value/bound deficits
  bool ok() const { return n_violations == 0; }
};

// Verifies c^{-1} 2^{-delta(au+1)} <= frakN(delta) <= c 2^{-delta(al+1)}
// with c = c_upper/c_lower from the certificate, for delta in
// {0,...,delta_max} and each kappa.
FrakNBoundsReport frakN_bounds_check(const ScalingFunction& phi,
                                     std::span<const double> kappas,
                                     int delta_max);

// Geometry classification of a point pair at time scale t. Axes are
// sorted by |dx_i|; n values are dyadic indices with nullopt standing
// for -infinity (coincident coordinates).
struct GeometryContext {
  double t = 0.0;
  double kappa = 0.0;                       // phi^{-1}(t)
  std::vector<int> order;                   // sorting permutation of axes
  std::vector<std::optional<long long>> n;  // sorted dyadic indices
  std::vector<double> radius;               // R_i = 2^{n_i} kappa (0 if -inf)
  int i0 = 0;                               // condition index in {1,...,d+1}
};

GeometryContext geometry_context(std::span<const double> x0,
                                 std::span<const double> y0, double t,
                                 const ScalingFunction& phi);

// Address of a point in the dyadic box decomposition around a center.
struct BoxIndex {
  bool central = false;            // the k = 0 cell
  long long k = 0;                 // sum of gamma, >= 1 for boxes
  std::vector<long long> gamma;    // per-axis dyadic exponents
  std::vector<int> sign;           // per-axis box orientation, +-1
};

BoxIndex box_index(std::span<const double> z, std::span<const double> y0,
                   double kappa);

// Number of disjoint boxes at shell k >= 1: 2^d C(d+k-1, d-1).
std::uint64_t box_count(long long k, int dim);

// Case analysis of the shell-sum exponent inequalities for one geometry.
struct CaseReport {
  int case_id = 0;        // 1 or 2
  int j0 = 0;             // witness index for case 1 (first that applies)
  double theta = 0.0;     // theta_l^{i0}
  double lhs = 0.0;
  double rhs = 0.0;       // includes the constant (c_upper/c_lower)^d
  double margin = 0.0;    // rhs / lhs
  bool holds = false;
};

// Evaluates the applicable inequality for the shell products: given the
// sorted dyadic indices n_{i0..d-l} (all >= 1) and q in [0, 1/(1+al)),
// determines Case I/II and checks lhs <= (c_upper/c_lower)^d rhs.
CaseReport check_case_inequalities(int dim, int level, int i0,
                                   double alpha_lower, double alpha_upper,
                                   double q,
                                   std::span<const long long> n_values,
                                   double kappa, const ScalingFunction& phi);

}  // namespace aniso
