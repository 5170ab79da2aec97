#pragma once

// Convergence-rate machinery: closed-form rate and constant calculators, the
// integrated-inverse-speed transform H and the moment bound built from it,
// exponential-rate fitting on measured distance curves, and the invariant
// measure fixed-point iteration for measure-dependent drifts.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mvsde/common.hpp"
#include "mvsde/geometry.hpp"
#include "mvsde/metrics.hpp"
#include "mvsde/model.hpp"
#include "mvsde/particle.hpp"

namespace mvsde {

// H(r) = int_0^r ds / Phi(s) for an increasing convex Phi >= 1, tabulated on
// [0, r_max] with the exact derivative 1/Phi at the nodes, plus its inverse
// extended by H_inv(s) = 0 for s <= 0.  H(infinity) is finite exactly when
// the tail integral converges (Phi growing faster than linearly).
struct HTransform {
  std::function<double(double)> Phi;
  double r_max = 0.0;
  Vec r_nodes;  // uniform grid on [0, r_max]
  Vec h_nodes;  // H at the nodes, strictly increasing
  double h_infinity = 0.0;
  bool h_infinity_finite = false;

  double H(double r) const;      // r in [0, r_max]
  double H_inv(double s) const;  // 0 for s <= 0; s <= H(r_max) otherwise
};

HTransform build_h_transform(std::function<double(double)> Phi, double r_max,
                             int table_size = 512);

// Moment decay bound  k * (1 + H_inv(H(v_x) - t/k)) * exp(-lambda t)  for
// t >= 0; non-increasing in t, equal to k*(1 + v_x) at t = 0, and equal to
// k*exp(-lambda t) once t >= k*H(v_x).
double convergence_bound(const HTransform& ht, double v_x, double k, double lambda, double t);

// Uniform ergodicity rate from a small-set return probability alpha and a
// two-point overlap bound beta over the window t0 + t1:
//   lambda = log(2 / (2 - alpha^2 (2 - beta))) / (t0 + t1),
// with the per-window contraction factor delta = (2 - alpha^2 (2 - beta))/2.
struct HarrisRate {
  double lambda = 0.0;
  double step_factor = 1.0;
};
HarrisRate harris_rate(double alpha, double beta, double t0, double t1);

// kappa1(c, lambda) = sup over t > log(c)/lambda of (1 - c e^{-lambda t})/sqrt(t);
// the largest feedback strength for which the measure fixed-point map stays a
// contraction.  Scales as kappa1(c, lambda) = sqrt(lambda) * kappa1(c, 1).
struct Kappa1 {
  double value = 0.0;
  double arg = 0.0;  // maximizing t
};
Kappa1 kappa1(double c, double lambda);

// Constants of the variation-norm feedback estimate: over one window of
// length t_hat = log(2c)/lambda the distance to equilibrium contracts by
//   delta_k = 1/2 + 4^{q-1} (c k)^q e^{2^{q-1} k^q t_hat} / (q lambda + 2^{q-1} k^q),
// giving the geometric rate lambda_prime = -(lambda/log(2c)) log(delta_k).
// The certificate is valid only while delta_k < 1.
struct FeedbackConstants {
  double t_hat = 0.0;
  double delta_k = 0.0;
  double lambda_prime = 0.0;
  bool valid = false;
};
FeedbackConstants feedback_constants(double c, double lambda, double q, double k);

// Largest feedback strength k with delta_k <= 1 (equivalently the bracketed
// term <= 1/2); the expression is increasing in k, so this is a bisection.
double max_feedback_strength(double c, double lambda, double q);

// Contraction rate from a radial drift-difference envelope
//   gamma(r) = (theta1 + theta2) * min(zeta/r, r) - (theta2 - theta0) * r,
// via  I = int_0^inf t exp((1/(2 alpha)) int_0^t gamma) dt  and
//   k = 2 alpha / I - (beta (theta2 - theta0) / (4 alpha)) * I.
// Requires theta2 > theta0 so that I is finite.  With zeta = 0 this reduces
// to k = (theta2 - theta0) - beta/2.
struct RadialEnvelope {
  std::function<double(double)> gamma;
  double tail_integral = 0.0;  // I
  double k = 0.0;
};
RadialEnvelope radial_envelope_rate(double alpha, double theta0, double theta1, double theta2,
                                    double beta, double zeta);

// Exponential certificate value(t) ~= c * exp(-lambda * t) fitted or supplied.
struct RateCertificate {
  double c = 0.0;
  double lambda = 0.0;
  std::string source = "fitted";
  double r_squared = 0.0;
  double t_begin = 0.0, t_end = 0.0;  // fit window actually used
  int points_used = 0;
  double noise_floor = 0.0;
  bool reliable = false;  // R^2 >= 0.9 and >= 4 points
};

// Least squares on log(values) over the window that survives burn-in (first
// burn_in_fraction of the time span) and sits strictly above noise_floor.
// Throws when fewer than 4 points remain.
RateCertificate fit_rate(const Vec& times, const Vec& values, double noise_floor,
                         double burn_in_fraction = 0.1);

// Fixed-point iteration for the invariant measure of a measure-dependent
// drift: freeze the measure argument, simulate the frozen (ergodic) dynamics
// to a long horizon, take the terminal ensemble as the next iterate.
struct FixedPointOptions {
  std::size_t n_particles = 4096;
  double dt = 1e-3;
  double t_stat = 10.0;      // horizon per iterate
  double tol = 1e-2;         // stop when the w1 gap drops below this
  int max_iters = 40;
  std::uint64_t seed = 1;    // iterate i simulates with seed + i
  int workers = 1;
  InitSpec init;             // first iterate
};

struct FixedPointResult {
  EmpiricalMeasure measure;
  std::vector<double> gap_history;  // w1 between successive iterates
  int iterations = 0;
  bool converged = false;
};

// freeze(gamma) must return a distribution-free model (the measure argument
// substituted into the drift).  Iterates use fresh seeds so gap decay is not
// an artifact of shared noise; at least two iterations run so the reported
// gap always compares two independently simulated ensembles.
FixedPointResult fixed_point_measure(
    const std::function<ModelSpec(const EmpiricalMeasure&)>& freeze, const DomainGeometry& domain,
    const FixedPointOptions& opt);

}  // namespace mvsde
