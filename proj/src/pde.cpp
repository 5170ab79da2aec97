#include "mvsde/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mvsde/rng.hpp"

namespace mvsde {

double DensityGrid::mass() const {
  return pairwise_sum(std::span<const double>(rho)) * h();
}

DensityGrid make_uniform_grid(double a, double b, int m) {
  if (!(b > a)) throw InvalidArgument("make_uniform_grid: need b > a");
  if (m < 2) throw InvalidArgument("make_uniform_grid: need at least 2 cells");
  DensityGrid g;
  g.a = a;
  g.b = b;
  g.m = m;
  g.rho.assign(m, 1.0 / (b - a));
  return g;
}

DensityGrid make_grid_from(double a, double b, int m, const std::function<double(double)>& f) {
  DensityGrid g = make_uniform_grid(a, b, m);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    const double v = f(g.center(i));
    if (!(v >= 0.0)) throw InvalidArgument("make_grid_from: density values must be nonnegative");
    g.rho[i] = v;
    total += v * g.h();
  }
  if (!(total > 0.0)) throw InvalidArgument("make_grid_from: density integrates to zero");
  for (double& r : g.rho) r /= total;
  return g;
}

namespace {

// Caches everything that does not change across steps: face coordinates and
// the static part of the face velocity.  Only the interaction part is
// re-evaluated per step.
struct Stepper {
  const ModelSpec& model;
  PdeOptions opt;
  int m;
  double h;
  Vec face_x;       // m+1 face coordinates
  Vec static_v;     // b0 + b1 at interior faces (index 1..m-1)
  Vec velocity;     // per-step face velocity
  Vec flux;         // per-step face flux, flux[0] = flux[m] = 0
  Vec centers;      // cell centers, quadrature nodes for the convolution

  Stepper(const DensityGrid& g, const ModelSpec& mdl, const PdeOptions& o)
      : model(mdl), opt(o), m(g.m), h(g.h()) {
    if (model.dim != 1) throw InvalidArgument("pde: model must be one-dimensional");
    if (!(opt.diffusion > 0.0)) throw InvalidArgument("pde: diffusion must be positive");
    face_x.resize(m + 1);
    for (int j = 0; j <= m; ++j) face_x[j] = g.a + j * h;
    centers.resize(m);
    for (int i = 0; i < m; ++i) centers[i] = g.a + (i + 0.5) * h;
    static_v.assign(m + 1, 0.0);
    double out = 0.0;
    for (int j = 1; j < m; ++j) {
      double v = 0.0;
      const std::span<const double> x(&face_x[j], 1);
      const std::span<double> o1(&out, 1);
      if (model.b0) {
        model.b0(x, o1);
        v += out;
      }
      if (model.b1) {
        model.b1(x, o1);
        v += out;
      }
      static_v[j] = v;
    }
    velocity.assign(m + 1, 0.0);
    flux.assign(m + 1, 0.0);
  }

  // Face velocities b + W*rho for the current density.
  void compute_velocity(const DensityGrid& g) {
    using Kind = InteractionKernel::Kind;
    if (model.kernel.kind == Kind::none) {
      velocity = static_v;
      return;
    }
    if (model.kernel.kind == Kind::linear) {
      // W(x,z) = coeff (z - x): the convolution collapses to the density mean.
      double mean = 0.0;
      for (int i = 0; i < m; ++i) mean += centers[i] * g.rho[i];
      mean *= h;
      const double c = model.kernel.coeff;
      for (int j = 1; j < m; ++j) velocity[j] = static_v[j] + c * (mean - face_x[j]);
      return;
    }
    // General kernel: midpoint quadrature sum W(x_face, z_j) rho_j h per face.
    parallel_for(static_cast<std::size_t>(m - 1), opt.workers,
                 [&](std::size_t lo, std::size_t hi) {
                   double wz = 0.0;
                   for (std::size_t jj = lo; jj < hi; ++jj) {
                     const int j = static_cast<int>(jj) + 1;
                     const std::span<const double> xf(&face_x[j], 1);
                     double acc = 0.0;
                     for (int i = 0; i < m; ++i) {
                       const std::span<const double> z(&centers[i], 1);
                       model.kernel.w(xf, z, std::span<double>(&wz, 1));
                       acc += wz * g.rho[i];
                     }
                     velocity[j] = static_v[j] + acc * h;
                   }
                 });
  }

  double max_dt() const {
    double vmax = 0.0;
    for (int j = 1; j < m; ++j) vmax = std::max(vmax, std::abs(velocity[j]));
    double lim = h * h / (2.0 * opt.diffusion);
    if (vmax > 0.0) lim = std::min(lim, h / vmax);
    return opt.cfl_safety * lim;
  }

  void apply(DensityGrid& g, double dt) {
    compute_velocity(g);
    const double dt_lim = max_dt();
    if (dt > dt_lim) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "pde step: dt=%.6g violates the CFL bound; use dt <= %.6g", dt, dt_lim);
      throw InvalidArgument(buf);
    }
    const double d_over_h = opt.diffusion / h;
    for (int j = 1; j < m; ++j) {
      const double v = velocity[j];
      const double up = v > 0.0 ? g.rho[j - 1] : g.rho[j];
      flux[j] = v * up - d_over_h * (g.rho[j] - g.rho[j - 1]);
    }
    const double r = dt / h;
    for (int i = 0; i < m; ++i) g.rho[i] -= r * (flux[i + 1] - flux[i]);
    g.time += dt;
  }
};

}  // namespace

void gm_step(DensityGrid& g, const ModelSpec& model, double dt, const PdeOptions& opt) {
  Stepper s(g, model, opt);
  s.apply(g, dt);
}

double suggest_dt(const DensityGrid& g, const ModelSpec& model, const PdeOptions& opt) {
  Stepper s(g, model, opt);
  // Worst-case interaction speed: the convolved density stays a probability
  // measure supported in [a, b], so |W*rho| at a face is bounded by the max of
  // |W(x_face, z)| over grid centers z.
  double vmax = 0.0;
  using Kind = InteractionKernel::Kind;
  for (int j = 1; j < g.m; ++j) {
    double v = std::abs(s.static_v[j]);
    if (model.kernel.kind == Kind::linear) {
      v += std::abs(model.kernel.coeff) * (g.b - g.a);
    } else if (model.kernel.kind == Kind::general) {
      double wb = 0.0, wz = 0.0;
      const std::span<const double> xf(&s.face_x[j], 1);
      for (int i = 0; i < g.m; ++i) {
        const std::span<const double> z(&s.centers[i], 1);
        model.kernel.w(xf, z, std::span<double>(&wz, 1));
        wb = std::max(wb, std::abs(wz));
      }
      v += wb;
    }
    vmax = std::max(vmax, v);
  }
  const double h = g.h();
  double lim = h * h / (2.0 * opt.diffusion);
  if (vmax > 0.0) lim = std::min(lim, h / vmax);
  return 0.9 * opt.cfl_safety * lim;
}

void advance(DensityGrid& g, const ModelSpec& model, double dt, double t_final,
             const PdeOptions& opt) {
  const double span = t_final - g.time;
  if (span <= 0.0) return;
  const long long n = std::max(1ll, std::llround(span / dt));
  const double step_dt = span / static_cast<double>(n);
  Stepper s(g, model, opt);
  for (long long k = 0; k < n; ++k) s.apply(g, step_dt);
  g.time = t_final;
}

SteadyStateResult steady_state(DensityGrid g, const ModelSpec& model, double dt, double tol,
                               double t_max, const PdeOptions& opt) {
  if (!(tol > 0.0)) throw InvalidArgument("steady_state: tol must be positive");
  Stepper s(g, model, opt);
  const long long per_unit = std::max(1ll, std::llround(1.0 / dt));
  const double step_dt = 1.0 / static_cast<double>(per_unit);
  SteadyStateResult res;
  Vec prev = g.rho;
  while (g.time < t_max - 0.5 * step_dt) {
    for (long long k = 0; k < per_unit && g.time < t_max - 0.5 * step_dt; ++k) s.apply(g, step_dt);
    double change = 0.0;
    for (int i = 0; i < g.m; ++i) change += std::abs(g.rho[i] - prev[i]);
    change *= g.h();
    res.residual = change;
    prev = g.rho;
    if (change < tol) {
      res.converged = true;
      break;
    }
  }
  res.time = g.time;
  res.grid = std::move(g);
  return res;
}

double l1_distance(const DensityGrid& x, const DensityGrid& y) {
  if (x.m != y.m || x.a != y.a || x.b != y.b)
    throw InvalidArgument("l1_distance: grids must match");
  double acc = 0.0;
  for (int i = 0; i < x.m; ++i) acc += std::abs(x.rho[i] - y.rho[i]);
  return acc * x.h();
}

DensityGrid coarsen(const DensityGrid& g) {
  if (g.m % 2 != 0) throw InvalidArgument("coarsen: cell count must be even");
  DensityGrid c;
  c.a = g.a;
  c.b = g.b;
  c.m = g.m / 2;
  c.time = g.time;
  c.rho.resize(c.m);
  for (int i = 0; i < c.m; ++i) c.rho[i] = 0.5 * (g.rho[2 * i] + g.rho[2 * i + 1]);
  return c;
}

DensityComparison l1_against_measure(const DensityGrid& g, const EmpiricalMeasure& mu) {
  if (mu.dim != 1) throw InvalidArgument("l1_against_measure: sample must be one-dimensional");
  if (mu.n == 0) throw InvalidArgument("l1_against_measure: empty sample");
  Vec p(g.m, 0.0);
  DensityComparison cmp;
  const double h = g.h();
  for (std::size_t i = 0; i < mu.n; ++i) {
    const double x = mu.points[i];
    if (x < g.a || x > g.b) ++cmp.outside;
    int idx = static_cast<int>(std::floor((x - g.a) / h));
    idx = std::clamp(idx, 0, g.m - 1);
    p[idx] += mu.weight(i);
  }
  if (cmp.outside > static_cast<double>(mu.n) * 1e-3)
    std::fprintf(stderr, "l1_against_measure: %zu of %zu samples outside [%g, %g]\n", cmp.outside,
                 mu.n, g.a, g.b);
  double acc = 0.0;
  for (int i = 0; i < g.m; ++i) acc += std::abs(g.rho[i] - p[i] / h);
  cmp.l1 = acc * h;
  cmp.variation_norm = 0.5 * cmp.l1;
  return cmp;
}

DensityComparison l1_against_particles(const DensityGrid& g, const Ensemble& e) {
  return l1_against_measure(g, measure_of(e));
}

EmpiricalMeasure sample_from_grid(const DensityGrid& g, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample_from_grid: need at least one sample");
  Vec cdf(g.m + 1, 0.0);
  for (int i = 0; i < g.m; ++i) cdf[i + 1] = cdf[i] + g.rho[i] * g.h();
  const double total = cdf.back();
  if (!(total > 0.0)) throw InvalidArgument("sample_from_grid: density has zero mass");
  for (double& c : cdf) c /= total;
  EmpiricalMeasure mu;
  mu.dim = 1;
  mu.n = n;
  mu.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng::uniform_at(seed, rng::kStreamReference, static_cast<std::uint64_t>(i), 0);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    int idx = std::clamp(static_cast<int>(it - cdf.begin()) - 1, 0, g.m - 1);
    const double frac = (u - cdf[idx]) / std::max(cdf[idx + 1] - cdf[idx], 1e-300);
    mu.points[i] = g.a + (idx + frac) * g.h();
  }
  return mu;
}

}  // namespace mvsde
