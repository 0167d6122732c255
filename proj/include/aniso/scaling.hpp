#pragma once

#include <memory>
#include <string>
#include <vector>

namespace aniso {

// Two-sided power certificate for an increasing scaling function:
//   c_lower (R/r)^alpha_lower <= phi(R)/phi(r) <= c_upper (R/r)^alpha_upper
// for 0 < r <= R, with exponents in (0,2).
struct WsCertificate {
  double alpha_lower = 0.0;
  double alpha_upper = 0.0;
  double c_lower = 1.0;  // in (0,1]
  double c_upper = 1.0;  // in [1,inf)
};

struct WsViolation {
  double r = 0.0;
  double big_r = 0.0;
  double ratio = 0.0;  // violation severity, > 1 means the bound failed
  bool lower_side = false;
};

struct WsReport {
  std::size_t n_pairs = 0;
  std::size_t n_violations = 0;
  double worst_ratio = 0.0;  // max severity seen over all pairs
  std::vector<WsViolation> violations;  // capped sample of the failures
  bool ok() const { return n_violations == 0; }
};

// An increasing scaling function phi on [0,inf) with phi(0)=0, carrying
// its certificate. Values are immutable after construction; all
// operations are pure and safe to share across threads.
class ScalingFunction {
 public:
  enum class Family { kPowerLaw, kSumOfPowers, kTabulated };

  // Defaults to the identity power law phi(r) = r.
  ScalingFunction() = default;

  // phi(r) = scale * r^alpha, certificate (alpha, alpha, 1, 1).
  static ScalingFunction power_law(double alpha, double scale = 1.0);

  // phi(r) = 1 / sum_k c_k r^{-alpha_k}; the one-dimensional jump
  // intensity is then nu1(r) = sum_k c_k r^{-1-alpha_k}. Certificate
  // (min alpha_k, max alpha_k, 1, 1), which the sum satisfies term-wise.
  static ScalingFunction sum_of_powers(
      std::vector<std::pair<double, double>> coeff_exponent);

  // Strictly increasing samples (r_i, phi_i); log-log interpolation with
  // fitted power-law extrapolation at both ends. Certificate exponents
  // must be supplied; constants may be fitted afterwards via fit_ws.
  static ScalingFunction tabulated(std::vector<double> r,
                                   std::vector<double> phi,
                                   double alpha_lower, double alpha_upper);

  double operator()(double r) const { return eval(r); }
  double eval(double r) const;

  // Generalized inverse inf{r : phi(r) >= t}, t > 0. Bracketed bisection
  // in log r, bracket grown geometrically from r = 1.
  double inverse(double t) const;

  // nu1(r) = 1 / (r phi(r)), r > 0.
  double nu1(double r) const;

  // N(eps) = int_eps^inf nu1(s) ds. Adaptive quadrature on log panels up
  // to 1e6*eps, then an analytic power-law closure of the remaining tail
  // (a local exponent fit, consistent with (WS)).
  double tail_mass(double eps) const;

  // sigma^2(eps) = int_{-eps}^{eps} s^2 nu1(|s|) ds = 2 int_0^eps s/phi(s) ds.
  double small_jump_variance(double eps) const;

  // Quantile of the magnitude law above the cutoff: the s >= eps with
  // N(s)/N(eps) = 1-u. Bracketed bisection against tail_mass.
  double tail_quantile(double eps, double u) const;

  // phi_kappa(r) = phi(kappa r)/phi(kappa), same certificate, value 1 at
  // r = 1. Maps each built-in family to itself.
  ScalingFunction rescaled(double kappa) const;

  // Samples log-spaced pairs r <= R over [1e-6, 1e6] and reports every
  // pair violating either (WS) inequality.
  WsReport check_ws(std::size_t n_samples) const;

  // Scans the same pair grid and returns a certificate with the declared
  // exponents and the tightest constants consistent with the samples.
  WsCertificate fit_ws(std::size_t n_samples) const;

  // Same function with a replacement certificate (declared, not proven).
  static ScalingFunction with_certificate(ScalingFunction f, WsCertificate c);

  const WsCertificate& certificate() const { return cert_; }
  Family family() const { return family_; }
  std::string describe() const;

 private:
  Family family_ = Family::kPowerLaw;
  WsCertificate cert_{1.0, 1.0, 1.0, 1.0};
  // Power law.
  double alpha_ = 1.0;
  double scale_ = 1.0;
  // Sum of powers.
  std::vector<std::pair<double, double>> terms_;
  // Tabulated: log-log grid plus end-fitted exponents.
  std::vector<double> log_r_, log_phi_;
  double head_exp_ = 0.0, tail_exp_ = 0.0;
};

// Parses the family grammar used by config files and the CLI:
//   power:alpha=1.5,scale=1
//   sum:(c=1,a=0.5)+(c=1,a=1.5)
//   table:path.csv            (two-column CSV r,phi(r), strictly increasing)
// An optional suffix "|ws=al,au,cl,cu" overrides the certificate.
ScalingFunction parse_scaling(const std::string& spec);

}  // namespace aniso
