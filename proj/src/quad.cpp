#include "mvsde/quad.hpp"

#include <cmath>
#include <limits>

#include "mvsde/common.hpp"

namespace mvsde {

namespace {
double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                   double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol,
                        int max_depth) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = simpson(fa, fm, fb, b - a);
  const double tol = rel_tol * std::max(std::abs(whole), 1e-300);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

double integrate_to_infinity(const std::function<double(double)>& f, double a, double rel_tol,
                             bool* finite) {
  double total = 0.0;
  double left = a;
  double len = std::max(1.0, std::abs(a));
  int settled = 0;
  bool ok = false;
  for (int k = 0; k < 200; ++k) {
    const double right = left + len;
    const double inc = adaptive_simpson(f, left, right, rel_tol);
    total += inc;
    if (std::abs(inc) <= rel_tol * std::max(std::abs(total), 1e-300)) {
      if (++settled >= 2) {
        ok = true;
        break;
      }
    } else {
      settled = 0;
    }
    left = right;
    len *= 2.0;
  }
  if (finite) *finite = ok;
  return ok ? total : std::numeric_limits<double>::infinity();
}

ScalarMax maximize_unimodal(const std::function<double(double)>& f, double a, double initial_step,
                            double arg_tol) {
  if (!(initial_step > 0.0)) throw InvalidArgument("maximize_unimodal: step must be positive");
  // Expand until the function decreases, giving a bracket around the peak.
  double step = initial_step;
  double t_prev = a, t_cur = a + step;
  double f_prev = -std::numeric_limits<double>::infinity(), f_cur = f(t_cur);
  double t_best = t_cur, f_best = f_cur;
  double lo = a, hi = t_cur;
  for (int k = 0; k < 300; ++k) {
    step *= 2.0;
    const double t_next = t_cur + step;
    const double f_next = f(t_next);
    if (f_next > f_best) {
      f_best = f_next;
      t_best = t_next;
    }
    if (f_next < f_cur && f_cur >= f_prev) {
      lo = t_prev;
      hi = t_next;
      break;
    }
    t_prev = t_cur;
    f_prev = f_cur;
    t_cur = t_next;
    f_cur = f_next;
    hi = t_next;
  }
  // Golden-section contraction of the bracket.
  const double gr = 0.61803398874989485;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > arg_tol * (1.0 + std::abs(lo) + std::abs(hi))) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = f(x1);
    }
  }
  ScalarMax r;
  r.arg = 0.5 * (lo + hi);
  r.value = f(r.arg);
  if (f_best > r.value) {
    r.arg = t_best;
    r.value = f_best;
  }
  return r;
}

}  // namespace mvsde
