#include "aniso/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "aniso/quadrature.hpp"

namespace aniso {
namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double fitted_exponent(const ScalingFunction& phi, double s) {
  // Local power-law exponent of phi from a 4x ratio; exact for power laws.
  return std::log(phi.eval(4.0 * s) / phi.eval(s)) / std::log(4.0);
}

}  // namespace

ScalingFunction ScalingFunction::power_law(double alpha, double scale) {
  require(alpha > 0.0 && alpha < 2.0, "power_law: alpha must be in (0,2)");
  require(scale > 0.0, "power_law: scale must be positive");
  ScalingFunction f;
  f.family_ = Family::kPowerLaw;
  f.alpha_ = alpha;
  f.scale_ = scale;
  f.cert_ = {alpha, alpha, 1.0, 1.0};
  return f;
}

ScalingFunction ScalingFunction::sum_of_powers(
    std::vector<std::pair<double, double>> coeff_exponent) {
  require(!coeff_exponent.empty(), "sum_of_powers: need at least one term");
  double lo = 2.0, hi = 0.0;
  for (const auto& [c, a] : coeff_exponent) {
    require(c > 0.0, "sum_of_powers: coefficients must be positive");
    require(a > 0.0 && a < 2.0, "sum_of_powers: exponents must be in (0,2)");
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  ScalingFunction f;
  f.family_ = Family::kSumOfPowers;
  f.terms_ = std::move(coeff_exponent);
  f.cert_ = {lo, hi, 1.0, 1.0};
  return f;
}

ScalingFunction ScalingFunction::tabulated(std::vector<double> r,
                                           std::vector<double> phi,
                                           double alpha_lower,
                                           double alpha_upper) {
  require(r.size() == phi.size() && r.size() >= 3,
          "tabulated: need >= 3 matching samples");
  require(alpha_lower > 0.0 && alpha_lower <= alpha_upper && alpha_upper < 2.0,
          "tabulated: bad certificate exponents");
  ScalingFunction f;
  f.family_ = Family::kTabulated;
  f.log_r_.reserve(r.size());
  f.log_phi_.reserve(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    require(r[i] > 0.0 && phi[i] > 0.0, "tabulated: samples must be positive");
    if (i > 0)
      require(r[i] > r[i - 1] && phi[i] > phi[i - 1],
              "tabulated: grid must be strictly increasing");
    f.log_r_.push_back(std::log(r[i]));
    f.log_phi_.push_back(std::log(phi[i]));
  }
  const std::size_t n = f.log_r_.size();
  f.head_exp_ = (f.log_phi_[1] - f.log_phi_[0]) / (f.log_r_[1] - f.log_r_[0]);
  f.tail_exp_ = (f.log_phi_[n - 1] - f.log_phi_[n - 2]) /
                (f.log_r_[n - 1] - f.log_r_[n - 2]);
  f.cert_ = {alpha_lower, alpha_upper, 1.0, 1.0};
  return f;
}

double ScalingFunction::eval(double r) const {
  require(r >= 0.0, "eval: r must be nonnegative");
  if (r == 0.0) return 0.0;
  switch (family_) {
    case Family::kPowerLaw:
      return scale_ * std::pow(r, alpha_);
    case Family::kSumOfPowers: {
      double denom = 0.0;
      for (const auto& [c, a] : terms_) denom += c * std::pow(r, -a);
      return 1.0 / denom;
    }
    case Family::kTabulated: {
      const double lr = std::log(r);
      if (lr <= log_r_.front())
        return std::exp(log_phi_.front() + head_exp_ * (lr - log_r_.front()));
      if (lr >= log_r_.back())
        return std::exp(log_phi_.back() + tail_exp_ * (lr - log_r_.back()));
      const auto it = std::upper_bound(log_r_.begin(), log_r_.end(), lr);
      const std::size_t j = static_cast<std::size_t>(it - log_r_.begin());
      const double w = (lr - log_r_[j - 1]) / (log_r_[j] - log_r_[j - 1]);
      return std::exp(log_phi_[j - 1] + w * (log_phi_[j] - log_phi_[j - 1]));
    }
  }
  return 0.0;
}

double ScalingFunction::inverse(double t) const {
  require(t > 0.0, "inverse: t must be positive");
  // Grow a bracket [lo, hi] with phi(lo) < t <= phi(hi) geometrically
  // from r = 1; (WS) guarantees success in O(log) doublings.
  double lo = 1.0, hi = 1.0;
  if (eval(1.0) >= t) {
    lo = 0.5;
    int guard = 0;
    while (eval(lo) >= t) {
      hi = lo;
      lo *= 0.5;
      if (++guard > 4200)
        throw std::runtime_error("inverse: bracket expansion failed (low)");
    }
  } else {
    hi = 2.0;
    int guard = 0;
    while (eval(hi) < t) {
      lo = hi;
      hi *= 2.0;
      if (++guard > 4200)
        throw std::runtime_error("inverse: bracket expansion failed (high)");
    }
  }
  // Bisection in log r to 1e-12 absolute; returns the upper end, which
  // realizes inf{r : phi(r) >= t} for nondecreasing phi.
  double llo = std::log(lo), lhi = std::log(hi);
  while (lhi - llo > 1e-12) {
    const double mid = 0.5 * (llo + lhi);
    if (eval(std::exp(mid)) >= t)
      lhi = mid;
    else
      llo = mid;
  }
  return std::exp(lhi);
}

double ScalingFunction::nu1(double r) const {
  require(r > 0.0, "nu1: r must be positive");
  return 1.0 / (r * eval(r));
}

double ScalingFunction::tail_mass(double eps) const {
  require(eps > 0.0, "tail_mass: eps must be positive");
  const double cut = 1e6 * eps;
  const double body = integrate_log_panels(
      [this](double s) { return nu1(s); }, eps, cut, 1e-11);
  // Beyond the cutover phi is within (WS) of a pure power; close the
  // tail with the locally fitted exponent (exact for power-law tails).
  const double a = fitted_exponent(*this, cut);
  const double tail = 1.0 / (a * eval(cut));
  return body + tail;
}

double ScalingFunction::small_jump_variance(double eps) const {
  require(eps > 0.0, "small_jump_variance: eps must be positive");
  const double s0 = eps * 1e-8;
  const double body = integrate_log_panels(
      [this](double s) { return s / eval(s); }, s0, eps, 1e-11);
  // Analytic closure of [0, s0] with the locally fitted exponent; the
  // integrand there is s^{1-a} up to (WS) wiggle.
  const double a = fitted_exponent(*this, s0);
  const double head = s0 * s0 / ((2.0 - a) * eval(s0));
  return 2.0 * (body + head);
}

double ScalingFunction::tail_quantile(double eps, double u) const {
  require(eps > 0.0, "tail_quantile: eps must be positive");
  require(u > 0.0 && u < 1.0, "tail_quantile: u must be in (0,1)");
  const double target = (1.0 - u) * tail_mass(eps);
  double lo = eps, hi = eps;
  int guard = 0;
  while (tail_mass(hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 2100)
      throw std::runtime_error("tail_quantile: bracket expansion failed");
  }
  if (guard == 0) return eps;
  double llo = std::log(lo), lhi = std::log(hi);
  while (lhi - llo > 1e-12) {
    const double mid = 0.5 * (llo + lhi);
    if (tail_mass(std::exp(mid)) > target)
      llo = mid;
    else
      lhi = mid;
  }
  return std::exp(0.5 * (llo + lhi));
}

ScalingFunction ScalingFunction::rescaled(double kappa) const {
  require(kappa > 0.0, "rescaled: kappa must be positive");
  switch (family_) {
    case Family::kPowerLaw:
      return power_law(alpha_, 1.0);
    case Family::kSumOfPowers: {
      // phi(kappa r)/phi(kappa) stays in the family with coefficients
      // c_k kappa^{-a_k} / sum_j c_j kappa^{-a_j}.
      double norm = 0.0;
      for (const auto& [c, a] : terms_) norm += c * std::pow(kappa, -a);
      std::vector<std::pair<double, double>> scaled;
      scaled.reserve(terms_.size());
      for (const auto& [c, a] : terms_)
        scaled.emplace_back(c * std::pow(kappa, -a) / norm, a);
      return sum_of_powers(std::move(scaled));
    }
    case Family::kTabulated: {
      const double pk = eval(kappa);
      std::vector<double> r, p;
      r.reserve(log_r_.size());
      p.reserve(log_r_.size());
      for (std::size_t i = 0; i < log_r_.size(); ++i) {
        r.push_back(std::exp(log_r_[i]) / kappa);
        p.push_back(std::exp(log_phi_[i]) / pk);
      }
      return tabulated(std::move(r), std::move(p), cert_.alpha_lower,
                       cert_.alpha_upper);
    }
  }
  throw std::logic_error("rescaled: unreachable");
}

WsReport ScalingFunction::check_ws(std::size_t n_samples) const {
  require(n_samples >= 2, "check_ws: need n_samples >= 2");
  const double lo = std::log(1e-6), hi = std::log(1e6);
  std::vector<double> r(n_samples), ph(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    r[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) /
                             static_cast<double>(n_samples - 1));
    ph[i] = eval(r[i]);
  }
  WsReport report;
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (std::size_t j = i; j < n_samples; ++j) {
      ++report.n_pairs;
      const double x = r[j] / r[i];
      const double q = ph[j] / ph[i];
      const double lower = cert_.c_lower * std::pow(x, cert_.alpha_lower);
      const double upper = cert_.c_upper * std::pow(x, cert_.alpha_upper);
      // severity > 1 means the pair violates the certificate
      const double sev = std::max(lower / q, q / upper);
      report.worst_ratio = std::max(report.worst_ratio, sev);
      if (sev > 1.0 + 1e-12) {
        ++report.n_violations;
        if (report.violations.size() < 64)
          report.violations.push_back({r[i], r[j], sev, lower / q > 1.0});
      }
    }
  }
  return report;
}

WsCertificate ScalingFunction::fit_ws(std::size_t n_samples) const {
  require(n_samples >= 2, "fit_ws: need n_samples >= 2");
  const double lo = std::log(1e-6), hi = std::log(1e6);
  std::vector<double> r(n_samples), ph(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    r[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) /
                             static_cast<double>(n_samples - 1));
    ph[i] = eval(r[i]);
  }
  WsCertificate fit = cert_;
  fit.c_lower = 1.0;
  fit.c_upper = 1.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    for (std::size_t j = i; j < n_samples; ++j) {
      const double x = r[j] / r[i];
      const double q = ph[j] / ph[i];
      fit.c_lower = std::min(fit.c_lower, q / std::pow(x, fit.alpha_lower));
      fit.c_upper = std::max(fit.c_upper, q / std::pow(x, fit.alpha_upper));
    }
  }
  return fit;
}

ScalingFunction ScalingFunction::with_certificate(ScalingFunction f,
                                                  WsCertificate c) {
  f.cert_ = c;
  return f;
}

std::string ScalingFunction::describe() const {
  std::ostringstream out;
  switch (family_) {
    case Family::kPowerLaw:
      out << "power:alpha=" << alpha_ << ",scale=" << scale_;
      break;
    case Family::kSumOfPowers: {
      out << "sum:";
      bool first = true;
      for (const auto& [c, a] : terms_) {
        if (!first) out << "+";
        out << "(c=" << c << ",a=" << a << ")";
        first = false;
      }
      break;
    }
    case Family::kTabulated:
      out << "table:[" << log_r_.size() << " samples]";
      break;
  }
  return out.str();
}

namespace {

double parse_number(const std::string& s, const char* what) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("bad number for ") + what + ": " + s);
  }
  if (pos != s.size())
    throw std::invalid_argument(std::string("bad number for ") + what + ": " + s);
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

ScalingFunction parse_scaling(const std::string& full_spec) {
  std::string spec = full_spec;
  double ws[4] = {0, 0, 0, 0};
  bool have_ws = false;
  if (const auto bar = spec.find('|'); bar != std::string::npos) {
    const std::string opt = spec.substr(bar + 1);
    spec = spec.substr(0, bar);
    if (opt.rfind("ws=", 0) != 0)
      throw std::invalid_argument("scaling spec: unknown option " + opt);
    const auto parts = split(opt.substr(3), ',');
    if (parts.size() != 4)
      throw std::invalid_argument("scaling spec: ws= needs al,au,cl,cu");
    for (int i = 0; i < 4; ++i) ws[i] = parse_number(parts[i], "ws");
    have_ws = true;
  }

  ScalingFunction out = [&spec]() {
    if (spec.rfind("power:", 0) == 0) {
      double alpha = 0.0, scale = 1.0;
      bool saw_alpha = false;
      for (const auto& kv : split(spec.substr(6), ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("scaling spec: expected key=value: " + kv);
        const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "alpha") {
          alpha = parse_number(val, "alpha");
          saw_alpha = true;
        } else if (key == "scale") {
          scale = parse_number(val, "scale");
        } else {
          throw std::invalid_argument("scaling spec: unknown key " + key);
        }
      }
      if (!saw_alpha) throw std::invalid_argument("scaling spec: missing alpha");
      return ScalingFunction::power_law(alpha, scale);
    }
    if (spec.rfind("sum:", 0) == 0) {
      std::vector<std::pair<double, double>> terms;
      for (const auto& term : split(spec.substr(4), '+')) {
        if (term.size() < 2 || term.front() != '(' || term.back() != ')')
          throw std::invalid_argument("scaling spec: expected (c=..,a=..): " +
                                      term);
        double c = 0.0, a = 0.0;
        bool saw_c = false, saw_a = false;
        for (const auto& kv : split(term.substr(1, term.size() - 2), ',')) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos)
            throw std::invalid_argument("scaling spec: expected key=value: " +
                                        kv);
          const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
          if (key == "c") {
            c = parse_number(val, "c");
            saw_c = true;
          } else if (key == "a") {
            a = parse_number(val, "a");
            saw_a = true;
          } else {
            throw std::invalid_argument("scaling spec: unknown key " + key);
          }
        }
        if (!saw_c || !saw_a)
          throw std::invalid_argument("scaling spec: term needs c and a");
        terms.emplace_back(c, a);
      }
      return ScalingFunction::sum_of_powers(std::move(terms));
    }
    if (spec.rfind("table:", 0) == 0) {
      const std::string path = spec.substr(6);
      std::ifstream in(path);
      if (!in) throw std::invalid_argument("scaling spec: cannot open " + path);
      std::vector<double> r, p;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto cols = split(line, ',');
        if (cols.size() != 2)
          throw std::invalid_argument("scaling table: expected two columns");
        r.push_back(parse_number(cols[0], "r"));
        p.push_back(parse_number(cols[1], "phi"));
      }
      // Exponents default to the end-fitted slopes; override with |ws=.
      if (r.size() < 3)
        throw std::invalid_argument("scaling table: need >= 3 rows");
      const double head = std::log(p[1] / p[0]) / std::log(r[1] / r[0]);
      const double tail = std::log(p[p.size() - 1] / p[p.size() - 2]) /
                          std::log(r[r.size() - 1] / r[r.size() - 2]);
      const double al = std::max(1e-3, std::min(head, tail));
      const double au = std::min(2.0 - 1e-3, std::max(head, tail));
      return ScalingFunction::tabulated(std::move(r), std::move(p), al, au);
    }
    throw std::invalid_argument("scaling spec: unknown family in " + spec);
  }();

  if (have_ws) {
    WsCertificate cert{ws[0], ws[1], ws[2], ws[3]};
    if (!(cert.alpha_lower > 0.0 && cert.alpha_lower <= cert.alpha_upper &&
          cert.alpha_upper < 2.0 && cert.c_lower > 0.0 && cert.c_lower <= 1.0 &&
          cert.c_upper >= 1.0))
      throw std::invalid_argument("scaling spec: invalid ws certificate");
    return ScalingFunction::with_certificate(std::move(out), cert);
  }
  return out;
}

}  // namespace aniso
