#include "mvsde/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvsde/quad.hpp"
#include "mvsde/rng.hpp"

namespace mvsde {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Cubic Hermite on one table segment; node derivatives are exact (1/Phi).
double hermite(double y0, double y1, double d0, double d1, double h, double s) {
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 +
         (s3 - s2) * h * d1;
}
}  // namespace

double HTransform::H(double r) const {
  if (!(r >= 0.0)) throw InvalidArgument("HTransform::H: negative argument");
  const double slack = 1e-12 * (1.0 + r_max);
  if (r > r_max + slack)
    throw InvalidArgument("HTransform::H: argument above tabulated range; rebuild with larger r_max");
  r = std::min(r, r_max);
  const std::size_t m = r_nodes.size() - 1;
  const double h = r_max / static_cast<double>(m);
  std::size_t i = std::min(static_cast<std::size_t>(r / h), m - 1);
  const double s = (r - r_nodes[i]) / h;
  return hermite(h_nodes[i], h_nodes[i + 1], 1.0 / Phi(r_nodes[i]), 1.0 / Phi(r_nodes[i + 1]), h, s);
}

double HTransform::H_inv(double s) const {
  if (s <= 0.0) return 0.0;
  const double back = h_nodes.back();
  if (s >= back) {
    if (s <= back * (1.0 + 1e-12)) return r_max;
    throw InvalidArgument("HTransform::H_inv: argument above H(r_max); rebuild with larger r_max");
  }
  // Locate the table segment, then bisect the Hermite interpolant (strictly
  // increasing, so bisection is exact to rounding).
  const auto it = std::upper_bound(h_nodes.begin(), h_nodes.end(), s);
  std::size_t i = static_cast<std::size_t>(it - h_nodes.begin()) - 1;
  double lo = r_nodes[i], hi = r_nodes[i + 1];
  for (int iter = 0; iter < 80; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (H(mid) < s)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-16 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

HTransform build_h_transform(std::function<double(double)> Phi, double r_max, int table_size) {
  if (!(r_max > 0.0)) throw InvalidArgument("build_h_transform: r_max must be positive");
  if (table_size < 8) throw InvalidArgument("build_h_transform: table_size must be at least 8");
  HTransform ht;
  ht.Phi = std::move(Phi);
  ht.r_max = r_max;
  const int m = table_size;
  ht.r_nodes.resize(m + 1);
  ht.h_nodes.resize(m + 1);
  for (int i = 0; i <= m; ++i) {
    ht.r_nodes[i] = r_max * static_cast<double>(i) / m;
    const double v = ht.Phi(ht.r_nodes[i]);
    if (!(v >= 1.0 - 1e-12) || !std::isfinite(v))
      throw InvalidArgument("build_h_transform: Phi below 1 on the grid");
  }
  ht.h_nodes[0] = 0.0;
  const auto inv = [&ht](double s) { return 1.0 / ht.Phi(s); };
  for (int i = 0; i < m; ++i) {
    const double inc = adaptive_simpson(inv, ht.r_nodes[i], ht.r_nodes[i + 1], 1e-12, 48);
    if (!(inc > 0.0)) throw RuntimeFailure("build_h_transform: H increment not positive");
    ht.h_nodes[i + 1] = ht.h_nodes[i] + inc;
  }
  bool finite = false;
  const double tail = integrate_to_infinity(inv, r_max, 1e-12, &finite);
  ht.h_infinity_finite = finite;
  ht.h_infinity = finite ? ht.h_nodes.back() + tail : kInf;
  return ht;
}

double convergence_bound(const HTransform& ht, double v_x, double k, double lambda, double t) {
  if (!(t >= 0.0)) throw InvalidArgument("convergence_bound: t must be nonnegative");
  if (!(k > 0.0) || !(lambda > 0.0))
    throw InvalidArgument("convergence_bound: k and lambda must be positive");
  if (t == 0.0) return k * (1.0 + v_x);  // H_inv(H(v)) = v
  const double r = ht.H_inv(ht.H(v_x) - t / k);
  return k * (1.0 + r) * std::exp(-lambda * t);
}

HarrisRate harris_rate(double alpha, double beta, double t0, double t1) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw InvalidArgument("harris_rate: alpha must lie in (0, 1]");
  if (!(beta >= 0.0) || beta >= 2.0) throw InvalidArgument("harris_rate: beta must lie in [0, 2)");
  if (!(t0 > 0.0) || !(t1 > 0.0)) throw InvalidArgument("harris_rate: t0 and t1 must be positive");
  const double delta = 0.5 * (2.0 - alpha * alpha * (2.0 - beta));
  if (!(delta < 1.0)) throw InvalidArgument("harris_rate: no contraction for these parameters");
  HarrisRate r;
  r.step_factor = delta;
  r.lambda = -std::log(delta) / (t0 + t1);
  return r;
}

Kappa1 kappa1(double c, double lambda) {
  if (!(c > 1.0)) throw InvalidArgument("kappa1: c must exceed 1");
  if (!(lambda > 0.0)) throw InvalidArgument("kappa1: lambda must be positive");
  const double t_star = std::log(c) / lambda;
  const auto g = [c, lambda](double t) {
    return (1.0 - c * std::exp(-lambda * t)) / std::sqrt(t);
  };
  const double step = 0.5 * std::max(t_star, 1.0 / lambda);
  const ScalarMax m = maximize_unimodal(g, t_star, step, 1e-12);
  return Kappa1{m.value, m.arg};
}

namespace {
// The k-dependent term of the one-window contraction factor; increasing in k.
double feedback_term(double c, double lambda, double q, double k, double t_hat) {
  const double a = std::pow(4.0, q - 1.0) * std::pow(c * k, q);
  const double b = std::pow(2.0, q - 1.0) * std::pow(k, q);
  return a * std::exp(b * t_hat) / (q * lambda + b);
}
}  // namespace

FeedbackConstants feedback_constants(double c, double lambda, double q, double k) {
  if (!(c > 0.5)) throw InvalidArgument("feedback_constants: need log(2c) > 0, so c > 1/2");
  if (!(lambda > 0.0) || !(k > 0.0))
    throw InvalidArgument("feedback_constants: lambda and k must be positive");
  if (!(q >= 2.0)) throw InvalidArgument("feedback_constants: q must be at least 2");
  FeedbackConstants fc;
  fc.t_hat = std::log(2.0 * c) / lambda;
  fc.delta_k = 0.5 + feedback_term(c, lambda, q, k, fc.t_hat);
  fc.valid = std::isfinite(fc.delta_k) && fc.delta_k < 1.0;
  fc.lambda_prime = fc.valid ? -(lambda / std::log(2.0 * c)) * std::log(fc.delta_k) : 0.0;
  return fc;
}

double max_feedback_strength(double c, double lambda, double q) {
  if (!(c > 0.5)) throw InvalidArgument("max_feedback_strength: need log(2c) > 0, so c > 1/2");
  if (!(lambda > 0.0)) throw InvalidArgument("max_feedback_strength: lambda must be positive");
  if (!(q >= 2.0)) throw InvalidArgument("max_feedback_strength: q must be at least 2");
  const double t_hat = std::log(2.0 * c) / lambda;
  const auto f = [&](double k) { return feedback_term(c, lambda, q, k, t_hat); };
  double hi = 1.0;
  int guard = 0;
  while (f(hi) <= 0.5 && guard++ < 2000) hi *= 2.0;
  double lo = hi * 0.5;
  while (f(lo) > 0.5 && lo > 1e-300) lo *= 0.5;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) <= 0.5)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

RadialEnvelope radial_envelope_rate(double alpha, double theta0, double theta1, double theta2,
                                    double beta, double zeta) {
  if (!(alpha > 0.0)) throw InvalidArgument("radial_envelope_rate: alpha must be positive");
  if (theta0 < 0.0 || theta1 < 0.0 || theta2 < 0.0 || beta < 0.0 || zeta < 0.0)
    throw InvalidArgument("radial_envelope_rate: parameters must be nonnegative");
  if (!(theta2 > theta0))
    throw InvalidArgument(
        "radial_envelope_rate: theta2 must exceed theta0 (tail integral diverges otherwise)");
  const double a = theta1 + theta2, b = theta2 - theta0;
  RadialEnvelope res;
  res.gamma = [a, b, zeta](double r) {
    if (r <= 0.0) return 0.0;
    return a * std::min(zeta / r, r) - b * r;
  };
  // Antiderivative of gamma, piecewise across r = sqrt(zeta).
  const double sq = std::sqrt(zeta);
  const auto big_g = [a, b, zeta, sq](double t) {
    double attract = 0.0;  // integral of min(zeta/u, u) over [0, t]
    if (zeta > 0.0) attract = (t <= sq) ? 0.5 * t * t : 0.5 * zeta + zeta * std::log(t / sq);
    return a * attract - 0.5 * b * t * t;
  };
  const double inv2a = 0.5 / alpha;
  bool finite = false;
  res.tail_integral = integrate_to_infinity(
      [&](double t) { return t * std::exp(inv2a * big_g(t)); }, 0.0, 1e-12, &finite);
  if (!finite || !(res.tail_integral > 0.0))
    throw RuntimeFailure("radial_envelope_rate: tail integral did not converge");
  res.k = 2.0 * alpha / res.tail_integral - (beta * b / (4.0 * alpha)) * res.tail_integral;
  return res;
}

RateCertificate fit_rate(const Vec& times, const Vec& values, double noise_floor,
                         double burn_in_fraction) {
  if (times.size() != values.size())
    throw InvalidArgument("fit_rate: times and values must have equal length");
  if (times.size() < 4) throw InvalidArgument("fit_rate: need at least 4 samples");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw InvalidArgument("fit_rate: times must increase strictly");
  if (!(burn_in_fraction >= 0.0) || burn_in_fraction >= 1.0)
    throw InvalidArgument("fit_rate: burn_in_fraction must lie in [0, 1)");

  const double t_min = times.front() + burn_in_fraction * (times.back() - times.front());
  Vec t, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_min) continue;
    if (!(values[i] > noise_floor) || !(values[i] > 0.0)) continue;
    t.push_back(times[i]);
    y.push_back(std::log(values[i]));
  }
  const int used = static_cast<int>(t.size());
  if (used < 4)
    throw InvalidArgument("fit_rate: fewer than 4 points above the noise floor after burn-in");

  double tbar = 0.0, ybar = 0.0;
  for (int i = 0; i < used; ++i) {
    tbar += t[i];
    ybar += y[i];
  }
  tbar /= used;
  ybar /= used;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < used; ++i) {
    sxx += (t[i] - tbar) * (t[i] - tbar);
    sxy += (t[i] - tbar) * (y[i] - ybar);
  }
  const double slope = sxy / sxx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (int i = 0; i < used; ++i) {
    const double fit = ybar + slope * (t[i] - tbar);
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  RateCertificate cert;
  cert.lambda = -slope;
  cert.c = std::exp(ybar - slope * tbar);
  cert.source = "fitted";
  cert.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  cert.t_begin = t.front();
  cert.t_end = t.back();
  cert.points_used = used;
  cert.noise_floor = noise_floor;
  cert.reliable = cert.r_squared >= 0.9;
  return cert;
}

namespace {
double w1_gap(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  return a.dim == 1 ? w1_1d(a, b) : wp_exact(a, b, 1.0);
}
}  // namespace

FixedPointResult fixed_point_measure(
    const std::function<ModelSpec(const EmpiricalMeasure&)>& freeze, const DomainGeometry& domain,
    const FixedPointOptions& opt) {
  if (!freeze) throw InvalidArgument("fixed_point_measure: freeze callback is empty");
  if (opt.n_particles < 2) throw InvalidArgument("fixed_point_measure: need at least 2 particles");
  if (!(opt.dt > 0.0) || !(opt.t_stat > 0.0))
    throw InvalidArgument("fixed_point_measure: dt and t_stat must be positive");
  if (opt.max_iters < 2) throw InvalidArgument("fixed_point_measure: max_iters must be at least 2");

  Ensemble seed_ens = init_ensemble(domain, opt.init, opt.n_particles, opt.seed, rng::kStreamInitX,
                                    rng::kStreamNoiseX);
  EmpiricalMeasure current = measure_of(seed_ens);

  FixedPointResult res;
  for (int iter = 0; iter < opt.max_iters; ++iter) {
    ModelSpec frozen = freeze(current);
    if (frozen.distribution_dependent())
      throw InvalidArgument("fixed_point_measure: freeze must return a distribution-free model");
    // Warm-start from the previous iterate; the noise seed changes per
    // iteration so successive gaps compare independent simulations.
    InitSpec warm;
    warm.kind = InitKind::points;
    warm.points = current.points;
    Ensemble e = init_ensemble(domain, warm, opt.n_particles, opt.seed + 1 + iter, rng::kStreamInitX,
                               rng::kStreamNoiseX);
    simulate(e, frozen, domain, opt.dt, opt.t_stat, opt.t_stat, {}, opt.workers);
    EmpiricalMeasure next = measure_of(e);
    res.gap_history.push_back(w1_gap(current, next));
    res.iterations = iter + 1;
    current = std::move(next);
    if (res.gap_history.size() >= 2 && res.gap_history.back() < opt.tol) {
      res.converged = true;
      break;
    }
  }
  res.measure = std::move(current);
  return res;
}

}  // namespace mvsde
