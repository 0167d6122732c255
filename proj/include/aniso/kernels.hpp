#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aniso/scaling.hpp"

namespace aniso {

using Point = std::vector<double>;

// Result of a jump-kernel query. The diagonal is a distinct variant, not
// a numeric sentinel, so callers cannot integrate through it silently.
struct KernelValue {
  enum class Kind { kAxis, kZero, kDiagonal };
  Kind kind = Kind::kZero;
  int axis = -1;       // 0-based, valid for kAxis
  double value = 0.0;  // valid for kAxis

  static KernelValue axis_value(int i, double v) {
    return {Kind::kAxis, i, v};
  }
  static KernelValue zero() { return {Kind::kZero, -1, 0.0}; }
  static KernelValue diagonal() { return {Kind::kDiagonal, -1, 0.0}; }
};

// Symmetric multiplier lambda(x,y) in [1/Lambda, Lambda]. Built-ins are
// functions of x+y or x-y only, so symmetry holds by construction.
class Multiplier {
 public:
  enum class Kind { kConstant, kCheckerboard, kSmoothWave };

  static Multiplier constant(double c);
  static Multiplier checkerboard(double period, double low, double high);
  static Multiplier smooth_wave(double frequency, double amplitude);

  double operator()(std::span<const double> x, std::span<const double> y) const;
  // Same multiplier queried for an axis jump from x: y = x + h e_i.
  double axis_jump(std::span<const double> x, int axis, double h) const;

  double min_value() const;
  double max_value() const;
  double inv_period() const { return inv_a_; }  // checkerboard only
  Kind kind() const { return kind_; }
  std::string describe() const;

 private:
  Kind kind_ = Kind::kConstant;
  double a_ = 1.0, b_ = 0.0, c_ = 0.0;
  double inv_a_ = 1.0;
};

// Lambda-comparable axis-aligned jump kernel J(x,y) = lambda(x,y) J^phi(x,y),
// optionally truncated at |x-y| <= trunc.
struct KernelSpec {
  ScalingFunction phi;
  int dim = 1;
  double lambda_bound = 1.0;  // Lambda >= 1
  Multiplier multiplier = Multiplier::constant(1.0);
  std::optional<double> truncation;  // nullopt = untruncated

  void validate() const;  // throws if the multiplier leaves [1/Lambda, Lambda]
};

// J^phi(x,y): Axis(i, 1/(|dx_i| phi(|dx_i|))) when exactly one coordinate
// differs, Zero when two or more differ, Diagonal when x == y.
KernelValue jump_kernel_phi(std::span<const double> x,
                            std::span<const double> y,
                            const ScalingFunction& phi);

// lambda(x,y) * J^phi(x,y), with the truncation window applied. Throws if
// the multiplier violates its Lambda bound at the queried pair.
KernelValue jump_kernel(std::span<const double> x, std::span<const double> y,
                        const KernelSpec& spec);

// Returns a copy of `spec` whose kernel vanishes for |x-y| > lam.
KernelSpec truncate(const KernelSpec& spec, double lam);

// Factored closed-form envelope value at (t, x, y).
struct EnvelopeValue {
  double prefactor = 0.0;             // [phi^{-1}(t)]^{-d}
  std::vector<double> axis_factors;   // each in [0,1]
  double value = 0.0;                 // prefactor * prod(axis_factors)
};

// prod_i ( [phi^{-1}(t)]^{-1} min t nu1(|dx_i|) ), reported in factored
// form; the product form of the transition-density envelope for Z.
EnvelopeValue envelope_z(double t, std::span<const double> x,
                         std::span<const double> y,
                         const ScalingFunction& phi);

// [phi^{-1}(t)]^{-d} prod_i (1 min t phi^{-1}(t)/(|dx_i| phi(|dx_i|))),
// the envelope for X; algebraically identical to envelope_z.
EnvelopeValue envelope_x(double t, std::span<const double> x,
                         std::span<const double> y,
                         const ScalingFunction& phi);

// A function tabulated on a uniform grid over a box, multilinear between
// nodes, zero outside. Used by the energy quadrature.
struct GridFunction {
  int dim = 1;
  std::vector<double> lo, hi;     // box corners
  std::vector<int> n;             // nodes per axis (>= 2)
  std::vector<double> values;     // row-major, size prod(n)

  double spacing(int axis) const {
    return (hi[axis] - lo[axis]) / (n[axis] - 1);
  }
  double operator()(std::span<const double> x) const;
  double partial(int axis, std::span<const double> x) const;
  void validate_compact_support() const;  // boundary nodes must vanish
};

// Quadrature of  sum_i  iint (f(x+e_i tau) - f(x))^2 J(x, x+e_i tau) dtau dx.
// The |tau| -> 0 singularity is closed with a second-order Taylor term
// below tau_min = h/100; the far field is closed with tail masses.
double dirichlet_energy(const GridFunction& f, const KernelSpec& spec);

struct NashReport {
  std::vector<double> scales;
  std::vector<double> ratios;  // ||f||_2^2 / (E(f,f) phi(||f||_2^{-2/d}))
  double max_ratio = 0.0;
  double spread = 0.0;  // max/min
  bool pass = false;
};

// Evaluates the Nash-form ratio on dilations s in {1/4,1/2,1,2,4} of an
// L1-normalized bump; PASS iff all ratios are finite and spread <= 100.
NashReport nash_check(const KernelSpec& spec, int grid_nodes = 0);

}  // namespace aniso
