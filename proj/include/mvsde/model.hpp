#pragma once

// Model specification: drift split into a bounded rough part b0 and a locally
// bounded part b1, an optional pair-interaction kernel acting through the
// empirical measure, and a diffusion coefficient with an optional isotropic
// decomposition  sigma sigma^T = alpha I + hat hat^T  (the isotropic part is
// what distance-reflecting couplings act on).

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "mvsde/common.hpp"
#include "mvsde/metrics.hpp"

namespace mvsde {

// Writes the field value at x into out (both of the model dimension).
using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;

struct InteractionKernel {
  enum class Kind { none, linear, general };
  // Regularity the kernel is assumed to have in its measure argument; carried
  // as metadata for reporting, it does not change the computation.
  enum class Regularity { variation, wasserstein };

  Kind kind = Kind::none;
  Regularity regularity = Regularity::wasserstein;
  // linear: W(x,z) = coeff * (z - x); its mean-field average needs only the
  // measure mean, so particle systems avoid the O(N^2) pair sum.
  double coeff = 0.0;
  // general: arbitrary W(x,z), averaged over the measure by direct summation.
  std::function<void(std::span<const double> x, std::span<const double> z, std::span<double> out)> w;

  bool mean_reducible() const { return kind != Kind::general; }
};

struct SigmaSpec {
  // Scalar form sigma(x) = value * I_d (the common case), or a general
  // d x m matrix function written row-major into out.
  bool scalar = true;
  double value = 1.4142135623730951;  // sqrt(2)
  int noise_dim = 0;                  // m; 0 means equal to the model dimension
  std::function<void(std::span<const double> x, std::span<double> out)> matrix;

  // Optional isotropic decomposition sigma sigma^T = alpha I + hat hat^T.
  // Scalar sigma implies alpha = value^2 and an absent hat part.
  std::optional<double> alpha;
  int hat_dim = 0;
  std::function<void(std::span<const double> x, std::span<double> out)> hat;
};

struct ModelSpec {
  std::string name = "custom";
  int dim = 1;
  VectorField b0;  // bounded, possibly discontinuous; may be empty
  VectorField b1;  // locally bounded; may be empty
  InteractionKernel kernel;
  SigmaSpec sigma;

  bool distribution_dependent() const { return kernel.kind != InteractionKernel::Kind::none; }
  double isotropic_alpha() const;  // alpha of the decomposition; throws if absent
};

// Full drift b(x, mu) = b0(x) + b1(x) + integral of W(x, .) against mu.
Vec drift(const ModelSpec& model, std::span<const double> x, const EmpiricalMeasure& mu);
// Drift without a measure argument; requires a distribution-free model.
Vec drift(const ModelSpec& model, std::span<const double> x);

// Evaluates sigma(x) as a d x m row-major matrix.
Vec sigma_matrix(const ModelSpec& model, std::span<const double> x);

// Max entrywise deviation between sigma sigma^T and alpha I + hat hat^T over
// the probe points; models carrying a decomposition should stay below 1e-10.
double sigma_decomposition_error(const ModelSpec& model, const std::vector<Vec>& probes);

// Lyapunov data for the drift condition
//   <b1, grad V>(x) + eps |b1(x)| sup_{B(x,eps)} (|grad V| + |hess V|)
//     <= K - eps * Phi(V(x)).
// The ball supremum is approximated on the 2d+1 stencil {x, x +- eps e_i}
// with a fixed 1.1 safety factor.
struct LyapunovSpec {
  std::function<double(std::span<const double>)> V;
  std::function<void(std::span<const double>, std::span<double>)> grad;  // d values
  std::function<void(std::span<const double>, std::span<double>)> hess;  // d*d row-major
  std::function<double(double)> Phi;  // applied to V values
  double K = 0.0;
  double eps = 0.01;
};

// Concave modulus profile used by distance-contraction couplings: psi(0)=0,
// psi' > 0 and bounded, and r psi'(r) + r^2 max(psi'',0) <= kappa psi(r).
struct PsiProfile {
  std::function<double(double)> psi, dpsi, d2psi;
  double kappa = 1.0;
  double sup_dpsi = 1.0;

  static PsiProfile linear();          // psi(r) = r
  static PsiProfile saturating_exp();  // psi(r) = 1 - exp(-r)
};

// Built-in model families (all one-dimensional, scalar diffusion).
ModelSpec make_ou(double sigma = 1.4142135623730951);
ModelSpec make_double_well(double sigma = 1.4142135623730951);
// b1(x) = -x - x^3 with linear attraction W(x,z) = -beta (x - z).
ModelSpec make_granular_media(double beta = 0.1, double sigma = 1.4142135623730951);
// b1(x) = -x with linear attraction toward the measure mean.
ModelSpec make_mean_field_ou(double beta = 0.1, double sigma = 1.4142135623730951);
// b1(x) = -x + 2 x (1-|x|) on |x| <= 1: repelling near the origin, dissipative
// outside the unit band.
ModelSpec make_partial_dissipative(double sigma = 1.4142135623730951);

}  // namespace mvsde
