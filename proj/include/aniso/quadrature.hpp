#pragma once

#include <functional>

namespace aniso {

// Adaptive Gauss-Kronrod (G7,K15) integration on [a,b].
// Recursively bisects panels until the K15-G7 error estimate meets the
// requested tolerance. Throws std::runtime_error on non-convergence.
double integrate_gk(const std::function<double(double)>& f, double a, double b,
                    double rel_tol = 1e-10, double abs_tol = 0.0,
                    int max_depth = 40);

// Same integrand evaluated on geometric panels: integrates f over [a,b]
// with 0 < a < b by splitting into log-spaced octaves first. Suited to
// power-law-like integrands.
double integrate_log_panels(const std::function<double(double)>& f, double a,
                            double b, double rel_tol = 1e-10);

}  // namespace aniso
