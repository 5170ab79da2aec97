#include "mvsde/model.hpp"

#include <cmath>

namespace mvsde {

double ModelSpec::isotropic_alpha() const {
  if (sigma.scalar) return sigma.value * sigma.value;
  if (sigma.alpha) return *sigma.alpha;
  throw InvalidArgument("isotropic_alpha: sigma carries no isotropic decomposition");
}

namespace {
void add_kernel_average(const ModelSpec& model, std::span<const double> x,
                        const EmpiricalMeasure& mu, Vec& out) {
  const int d = model.dim;
  switch (model.kernel.kind) {
    case InteractionKernel::Kind::none:
      return;
    case InteractionKernel::Kind::linear: {
      const Vec m = mu.mean();
      for (int k = 0; k < d; ++k) out[k] += model.kernel.coeff * (m[k] - x[k]);
      return;
    }
    case InteractionKernel::Kind::general: {
      Vec acc(d, 0.0), wv(d);
      for (std::size_t i = 0; i < mu.n; ++i) {
        model.kernel.w(x, mu.point(i), wv);
        const double wt = mu.weight(i);
        for (int k = 0; k < d; ++k) acc[k] += wt * wv[k];
      }
      for (int k = 0; k < d; ++k) out[k] += acc[k];
      return;
    }
  }
}
}  // namespace

Vec drift(const ModelSpec& model, std::span<const double> x, const EmpiricalMeasure& mu) {
  if (x.size() != static_cast<std::size_t>(model.dim)) throw InvalidArgument("drift: dimension mismatch");
  if (model.distribution_dependent() && mu.dim != model.dim)
    throw InvalidArgument("drift: measure dimension mismatch");
  Vec out(model.dim, 0.0), tmp(model.dim);
  if (model.b0) {
    model.b0(x, tmp);
    for (int k = 0; k < model.dim; ++k) out[k] += tmp[k];
  }
  if (model.b1) {
    model.b1(x, tmp);
    for (int k = 0; k < model.dim; ++k) out[k] += tmp[k];
  }
  add_kernel_average(model, x, mu, out);
  return out;
}

Vec drift(const ModelSpec& model, std::span<const double> x) {
  if (model.distribution_dependent())
    throw InvalidArgument("drift: model needs a measure argument");
  EmpiricalMeasure dummy;
  dummy.dim = model.dim;
  return drift(model, x, dummy);
}

Vec sigma_matrix(const ModelSpec& model, std::span<const double> x) {
  const int d = model.dim;
  const int m = model.sigma.noise_dim > 0 ? model.sigma.noise_dim : d;
  Vec out(static_cast<std::size_t>(d) * m, 0.0);
  if (model.sigma.scalar) {
    for (int i = 0; i < std::min(d, m); ++i) out[static_cast<std::size_t>(i) * m + i] = model.sigma.value;
    return out;
  }
  if (!model.sigma.matrix) throw InvalidArgument("sigma_matrix: no matrix function provided");
  model.sigma.matrix(x, out);
  return out;
}

double sigma_decomposition_error(const ModelSpec& model, const std::vector<Vec>& probes) {
  const int d = model.dim;
  const double alpha = model.isotropic_alpha();
  if (alpha <= 0.0) throw InvalidArgument("sigma_decomposition_error: alpha must be positive");
  double worst = 0.0;
  for (const Vec& x : probes) {
    const Vec s = sigma_matrix(model, x);
    const int m = static_cast<int>(s.size()) / d;
    Vec hat;
    const int mh = model.sigma.hat_dim;
    if (model.sigma.hat) {
      hat.assign(static_cast<std::size_t>(d) * mh, 0.0);
      model.sigma.hat(x, hat);
    }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double ss = 0.0;
        for (int k = 0; k < m; ++k) ss += s[static_cast<std::size_t>(i) * m + k] * s[static_cast<std::size_t>(j) * m + k];
        double rec = (i == j) ? alpha : 0.0;
        for (int k = 0; k < mh; ++k) rec += hat[static_cast<std::size_t>(i) * mh + k] * hat[static_cast<std::size_t>(j) * mh + k];
        worst = std::max(worst, std::abs(ss - rec));
      }
  }
  return worst;
}

PsiProfile PsiProfile::linear() {
  PsiProfile p;
  p.psi = [](double r) { return r; };
  p.dpsi = [](double) { return 1.0; };
  p.d2psi = [](double) { return 0.0; };
  p.kappa = 1.0;
  p.sup_dpsi = 1.0;
  return p;
}

PsiProfile PsiProfile::saturating_exp() {
  PsiProfile p;
  p.psi = [](double r) { return 1.0 - std::exp(-r); };
  p.dpsi = [](double r) { return std::exp(-r); };
  p.d2psi = [](double r) { return -std::exp(-r); };
  p.kappa = 1.0;
  p.sup_dpsi = 1.0;
  return p;
}

namespace {
ModelSpec scalar_base(const char* name, double sigma) {
  ModelSpec m;
  m.name = name;
  m.dim = 1;
  m.sigma.scalar = true;
  m.sigma.value = sigma;
  m.sigma.alpha = sigma * sigma;
  return m;
}
}  // namespace

ModelSpec make_ou(double sigma) {
  ModelSpec m = scalar_base("ou", sigma);
  m.b1 = [](std::span<const double> x, std::span<double> out) { out[0] = -x[0]; };
  return m;
}

ModelSpec make_double_well(double sigma) {
  ModelSpec m = scalar_base("double_well", sigma);
  m.b1 = [](std::span<const double> x, std::span<double> out) { out[0] = x[0] - x[0] * x[0] * x[0]; };
  return m;
}

ModelSpec make_granular_media(double beta, double sigma) {
  ModelSpec m = scalar_base("granular_media", sigma);
  m.b1 = [](std::span<const double> x, std::span<double> out) { out[0] = -x[0] - x[0] * x[0] * x[0]; };
  m.kernel.kind = InteractionKernel::Kind::linear;
  m.kernel.coeff = beta;
  return m;
}

ModelSpec make_mean_field_ou(double beta, double sigma) {
  ModelSpec m = scalar_base("mean_field_ou", sigma);
  m.b1 = [](std::span<const double> x, std::span<double> out) { out[0] = -x[0]; };
  m.kernel.kind = InteractionKernel::Kind::linear;
  m.kernel.coeff = beta;
  return m;
}

ModelSpec make_partial_dissipative(double sigma) {
  ModelSpec m = scalar_base("partial_dissipative", sigma);
  m.b1 = [](std::span<const double> x, std::span<double> out) {
    const double a = std::abs(x[0]);
    out[0] = -x[0] + (a <= 1.0 ? 2.0 * x[0] * (1.0 - a) : 0.0);
  };
  return m;
}

}  // namespace mvsde
