#pragma once

#include <functional>

namespace mvsde {

// Adaptive Simpson integration of f over [a,b] to a relative tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-10, int max_depth = 60);

// Integral of f over [a, infinity) by interval doubling; *finite is cleared
// when the partial sums fail to settle (divergent or too-slowly-decaying
// tails).
double integrate_to_infinity(const std::function<double(double)>& f, double a,
                             double rel_tol = 1e-10, bool* finite = nullptr);

struct ScalarMax {
  double arg = 0.0;
  double value = 0.0;
};

// Maximum of a unimodal f on (a, infinity): expand a bracket by doubling
// steps from a, then golden-section search to arg_tol.
ScalarMax maximize_unimodal(const std::function<double(double)>& f, double a, double initial_step,
                            double arg_tol = 1e-10);

}  // namespace mvsde
