#pragma once

// Distances between empirical measures: exact Wasserstein costs (1D quantile
// coupling, assignment solver in general), entropic-regularised transport,
// concave-profile transport costs, and histogram-based weighted variation and
// relative entropy.  Every estimator here is deterministic in its inputs.

#include <functional>
#include <span>
#include <vector>

#include "mvsde/common.hpp"

namespace mvsde {

struct EmpiricalMeasure {
  int dim = 1;
  std::size_t n = 0;
  Vec points;   // n * dim, row-major
  Vec weights;  // empty means uniform 1/n; otherwise sums to 1

  static EmpiricalMeasure from_points(int dim, Vec points, Vec weights = {});

  std::span<const double> point(std::size_t i) const { return {points.data() + i * dim, static_cast<std::size_t>(dim)}; }
  double weight(std::size_t i) const { return weights.empty() ? 1.0 / static_cast<double>(n) : weights[i]; }
  bool uniform() const { return weights.empty(); }
  Vec mean() const;
};

// Two measures binned on one shared grid (dimension 1 or 2).  Bin centers are
// aligned so the extreme data values sit at centers of the outermost cells;
// point masses therefore land on cells centered at the atoms.
struct HistogramPair {
  int dim = 1;
  std::vector<int> bins;  // per dimension
  Vec centers;            // cells * dim, row-major, cell index fastest in dim 0
  Vec p, q;               // probability mass per cell
  std::size_t cells() const { return p.size(); }
  std::span<const double> center(std::size_t c) const { return {centers.data() + c * dim, static_cast<std::size_t>(dim)}; }
};

struct BinningRule {
  int fixed_bins = 0;  // 0: Freedman-Diaconis from the joint sample
  int max_bins = 4096; // cap per dimension
};

HistogramPair make_histogram_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                  const BinningRule& rule = {});

// Probability mass of mu per cell for explicit 1D edges (size bins+1); values
// outside the range are clipped into the end bins.
Vec histogram_1d(const EmpiricalMeasure& mu, const Vec& edges);

// First Wasserstein distance in 1D via quantile-function coupling; supports
// general weights.
double w1_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// p-th Wasserstein distance in 1D via quantile coupling (monotone transport is
// optimal for the convex cost |x-y|^p, p >= 1); supports general weights.
double wp_quantile_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p);

// Exact p-th Wasserstein distance for uniformly weighted measures of equal
// size.  Dimension 1 uses sorted matching for any size; higher dimensions
// solve the assignment problem exactly and require n <= 2048 (use
// wp_sinkhorn beyond that).
double wp_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p);

struct SinkhornResult {
  double value = 0.0;   // debiased divergence, reported on the W_p scale
  bool converged = false;
  int iterations = 0;
  double reg = 0.0;     // regularisation actually used
};

// Entropic-regularised transport with debiasing:
//   S(mu,nu) = OT_reg(mu,nu) - (OT_reg(mu,mu) + OT_reg(nu,nu)) / 2,
// computed in the log domain with regularisation scaling.  reg <= 0 selects
// the default 0.05 * median(pairwise distance)^p.  S(mu,mu) = 0 up to solver
// tolerance; the returned value is max(S,0)^(1/p).
SinkhornResult wp_sinkhorn(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                           double reg = 0.0, int max_iters = 10000);

// Transport cost with a concave radial profile: inf over pairings of the mean
// of psi(|x_i - y_sigma(i)|).  Always solved as an assignment problem
// (monotone shortcuts are invalid for concave profiles); n <= 2048.
double w_psi(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
             const std::function<double(double)>& psi);

// sup_{|f| <= V} |mu(f) - nu(f)| estimated on a shared histogram:
// sum over cells of |p_c - q_c| * V(center_c).  V == 1 gives the total
// variation distance with values in [0,2].
double weighted_variation(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                          const std::function<double(std::span<const double>)>& V,
                          const BinningRule& rule = {});
double weighted_variation(const HistogramPair& h,
                          const std::function<double(std::span<const double>)>& V);

// Relative entropy of binned measures with additive smoothing
// p~ = (p + a)/(1 + cells*a); pseudo_count < 0 selects the default
// 0.5 / min(n_mu, n_nu).  Without smoothing, mass of mu outside the support
// of nu yields +infinity.
double relative_entropy(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                        const BinningRule& rule = {}, double pseudo_count = -1.0);
double relative_entropy(const HistogramPair& h, double pseudo_count);

}  // namespace mvsde
