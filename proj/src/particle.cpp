#include "mvsde/particle.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>

#include "mvsde/rng.hpp"

namespace mvsde {

namespace {

constexpr int kMaxRejectionAttempts = 100000;
constexpr std::size_t kPairSumWarnN = 20000;

void warn_pair_sum_once(std::size_t n) {
  static std::once_flag flag;
  std::call_once(flag, [n] {
    std::fprintf(stderr,
                 "warning: general interaction kernel with n=%zu particles runs the O(n^2) pair sum; "
                 "use a linear kernel for mean-field reduction\n",
                 n);
  });
}

int noise_dim_of(const ModelSpec& model) {
  return model.sigma.noise_dim > 0 ? model.sigma.noise_dim : model.dim;
}

// Per-call precomputed stepping context for one ensemble side.
struct StepCtx {
  const ModelSpec* model = nullptr;
  const DomainGeometry* domain = nullptr;
  int d = 1, m = 1;
  double dt = 0.0, sqdt = 0.0;
  bool has_b0 = false, has_b1 = false;
  bool scalar_sigma = true;
  double sig_step = 0.0;  // sigma value * sqrt(dt)
  InteractionKernel::Kind kkind = InteractionKernel::Kind::none;
  double coeff = 0.0;
  Vec mean;       // linear kernel: pre-step measure mean
  Vec snapshot;   // general kernel: pre-step positions
  std::size_t snap_n = 0;
  bool full_space = false;
};

StepCtx make_ctx(const Ensemble& e, const ModelSpec& model, const DomainGeometry& domain, double dt) {
  if (e.dim != model.dim || e.dim != domain.dim())
    throw InvalidArgument("step: ensemble, model and domain dimensions disagree");
  if (!(dt > 0.0)) throw InvalidArgument("step: dt must be positive");
  StepCtx c;
  c.model = &model;
  c.domain = &domain;
  c.d = e.dim;
  c.m = noise_dim_of(model);
  c.dt = dt;
  c.sqdt = std::sqrt(dt);
  c.has_b0 = static_cast<bool>(model.b0);
  c.has_b1 = static_cast<bool>(model.b1);
  c.scalar_sigma = model.sigma.scalar;
  c.sig_step = model.sigma.value * c.sqdt;
  c.kkind = model.kernel.kind;
  c.coeff = model.kernel.coeff;
  c.full_space = domain.kind() == DomainKind::full_space;
  if (c.kkind == InteractionKernel::Kind::linear) {
    c.mean.assign(c.d, 0.0);
    for (int k = 0; k < c.d; ++k)
      c.mean[k] = pairwise_sum(e.n, [&](std::size_t i) { return e.x[i * c.d + k]; }) /
                  static_cast<double>(e.n);
  } else if (c.kkind == InteractionKernel::Kind::general) {
    if (e.n > kPairSumWarnN) warn_pair_sum_once(e.n);
    c.snapshot = e.x;  // drift must see the pre-step empirical measure
    c.snap_n = e.n;
  }
  return c;
}

// Drift * dt + noise, then projection.  Writes the new position into pos and
// returns the local time increment.  xi holds the m noise draws (already
// standard normal); a non-empty noise_disp bypasses the sigma application and
// is added verbatim (used by couplings that assemble the noise themselves).
inline double advance_one(const StepCtx& c, std::span<double> pos, std::span<const double> xi,
                          Vec& scratch, std::span<const double> noise_disp = {}) {
  const int d = c.d;
  // Scratch layout: [0,d) proposal, [d,2d) field value, [2d,3d) kernel
  // accumulator, [3d, 3d+d*m) sigma matrix.  Stack buffers cover d <= 8.
  double buf[24];
  const bool small = d <= 8;
  const std::size_t need = static_cast<std::size_t>(3 * d) + static_cast<std::size_t>(d) * c.m;
  if (!small && scratch.size() < need) scratch.resize(need);
  double* prop = small ? buf : scratch.data();
  double* dr = small ? buf + 8 : scratch.data() + d;
  double* acc = small ? buf + 16 : scratch.data() + 2 * d;
  for (int k = 0; k < d; ++k) prop[k] = pos[k];
  std::span<double> drift_span(dr, static_cast<std::size_t>(d));
  if (c.has_b0) {
    c.model->b0(pos, drift_span);
    for (int k = 0; k < d; ++k) prop[k] += dr[k] * c.dt;
  }
  if (c.has_b1) {
    c.model->b1(pos, drift_span);
    for (int k = 0; k < d; ++k) prop[k] += dr[k] * c.dt;
  }
  if (c.kkind == InteractionKernel::Kind::linear) {
    for (int k = 0; k < d; ++k) prop[k] += c.coeff * (c.mean[k] - pos[k]) * c.dt;
  } else if (c.kkind == InteractionKernel::Kind::general) {
    for (int k = 0; k < d; ++k) acc[k] = 0.0;
    for (std::size_t j = 0; j < c.snap_n; ++j) {
      c.model->kernel.w(pos, {c.snapshot.data() + j * d, static_cast<std::size_t>(d)}, drift_span);
      for (int k = 0; k < d; ++k) acc[k] += dr[k];
    }
    for (int k = 0; k < d; ++k) prop[k] += acc[k] / static_cast<double>(c.snap_n) * c.dt;
  }
  if (!noise_disp.empty()) {
    for (int k = 0; k < d; ++k) prop[k] += noise_disp[k];
  } else if (c.scalar_sigma) {
    for (int k = 0; k < d; ++k) prop[k] += c.sig_step * xi[k];
  } else {
    const std::size_t nsig = static_cast<std::size_t>(d) * c.m;
    if (scratch.size() < 3 * static_cast<std::size_t>(d) + nsig)
      scratch.resize(3 * static_cast<std::size_t>(d) + nsig);
    std::span<double> sig(scratch.data() + 3 * d, nsig);
    c.model->sigma.matrix(pos, sig);
    for (int r = 0; r < d; ++r) {
      double s = 0.0;
      for (int k = 0; k < c.m; ++k) s += sig[static_cast<std::size_t>(r) * c.m + k] * xi[k];
      prop[r] += c.sqdt * s;
    }
  }
  double dl = 0.0;
  if (!c.full_space) dl = c.domain->project_into({prop, static_cast<std::size_t>(d)});
  for (int k = 0; k < d; ++k) pos[k] = prop[k];
  return dl;
}

void check_finite(const Ensemble& e, std::size_t i) {
  for (int k = 0; k < e.dim; ++k) {
    if (!std::isfinite(e.x[i * e.dim + k]))
      throw RuntimeFailure("simulation blow-up: non-finite position for particle " +
                           std::to_string(i) + " at time " + format_double(e.time));
  }
}

}  // namespace

Ensemble init_ensemble(const DomainGeometry& domain, const InitSpec& init, std::size_t n,
                       std::uint64_t seed, std::uint32_t init_stream, std::uint32_t noise_stream) {
  if (n == 0) throw InvalidArgument("init_ensemble: need at least one particle");
  const int d = domain.dim();
  Ensemble e;
  e.dim = d;
  e.n = n;
  e.seed = seed;
  e.noise_stream = noise_stream;
  e.local_time.assign(n, 0.0);
  e.x.assign(n * static_cast<std::size_t>(d), 0.0);
  switch (init.kind) {
    case InitKind::dirac: {
      if (init.point.size() != static_cast<std::size_t>(d))
        throw InvalidArgument("init_ensemble: dirac point has wrong dimension");
      if (!domain.contains(init.point))
        throw InvalidArgument("init_ensemble: dirac point lies outside the domain");
      for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) e.x[i * d + k] = init.point[k];
      break;
    }
    case InitKind::uniform_box: {
      if (init.lo.size() != static_cast<std::size_t>(d) || init.hi.size() != init.lo.size())
        throw InvalidArgument("init_ensemble: uniform bounds have wrong dimension");
      for (std::size_t i = 0; i < n; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxRejectionAttempts && !placed; ++attempt) {
          for (int k = 0; k < d; ++k) {
            const double u = rng::uniform_at(seed, init_stream, i,
                                             static_cast<std::uint64_t>(attempt) * d + k);
            e.x[i * d + k] = init.lo[k] + u * (init.hi[k] - init.lo[k]);
          }
          placed = domain.contains({e.x.data() + i * d, static_cast<std::size_t>(d)});
        }
        if (!placed)
          throw RuntimeFailure("init_ensemble: rejection sampling failed; box misses the domain");
      }
      break;
    }
    case InitKind::gaussian: {
      if (init.mean.size() != static_cast<std::size_t>(d) || init.stddev.size() != init.mean.size())
        throw InvalidArgument("init_ensemble: gaussian parameters have wrong dimension");
      for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) {
          const double z = rng::normal_at(seed, init_stream, i, static_cast<std::uint64_t>(k));
          e.x[i * d + k] = init.mean[k] + init.stddev[k] * z;
        }
        domain.project_into({e.x.data() + i * d, static_cast<std::size_t>(d)});
      }
      break;
    }
    case InitKind::points: {
      if (init.points.size() != n * static_cast<std::size_t>(d))
        throw InvalidArgument("init_ensemble: points size does not match n * dim");
      for (std::size_t i = 0; i < n * static_cast<std::size_t>(d); ++i) e.x[i] = init.points[i];
      for (std::size_t i = 0; i < n; ++i)
        if (!domain.contains({e.x.data() + i * d, static_cast<std::size_t>(d)}))
          throw InvalidArgument("init_ensemble: point " + std::to_string(i) + " lies outside the domain");
      break;
    }
  }
  return e;
}

EmpiricalMeasure sample_gaussian_reference(int dim, const Vec& mean, const Vec& stddev,
                                           std::size_t n, std::uint64_t seed) {
  if (mean.size() != static_cast<std::size_t>(dim) || stddev.size() != mean.size())
    throw InvalidArgument("sample_gaussian_reference: parameter dimensions disagree");
  Vec pts(n * static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k)
      pts[i * dim + k] =
          mean[k] + stddev[k] * rng::normal_at(seed, rng::kStreamReference, i, static_cast<std::uint64_t>(k));
  return EmpiricalMeasure::from_points(dim, std::move(pts));
}

EmpiricalMeasure measure_of(const Ensemble& e) {
  EmpiricalMeasure m;
  m.dim = e.dim;
  m.n = e.n;
  m.points = e.x;
  return m;
}

void step(Ensemble& e, const ModelSpec& model, const DomainGeometry& domain, double dt, int workers) {
  const StepCtx ctx = make_ctx(e, model, domain, dt);
  const std::uint64_t draw_base = e.step_index * static_cast<std::uint64_t>(ctx.m);
  // Scalar diffusions on the line or an interval dominate long runs, and the
  // generic path spends more time shuffling buffers than integrating.  This
  // specialisation keeps the whole update in registers; it consumes the same
  // draws and applies the same update and projection as the generic path.
  const bool interval_fast = ctx.d == 1 && ctx.m == 1 && ctx.scalar_sigma &&
                             ctx.kkind != InteractionKernel::Kind::general &&
                             (ctx.full_space || domain.kind() == DomainKind::box);
  if (interval_fast) {
    const double blo = ctx.full_space ? 0.0 : domain.box_lo()[0];
    const double bhi = ctx.full_space ? 0.0 : domain.box_hi()[0];
    const bool mean_pull = ctx.kkind == InteractionKernel::Kind::linear;
    const double mean0 = mean_pull ? ctx.mean[0] : 0.0;
    parallel_for(e.n, workers, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const double xi = rng::normal_at(e.seed, e.noise_stream, i, draw_base);
        double pos = e.x[i];
        double prop = pos;
        double dr = 0.0;
        const std::span<double> drift_span(&dr, 1);
        if (ctx.has_b0) {
          ctx.model->b0({&pos, 1}, drift_span);
          prop += dr * ctx.dt;
        }
        if (ctx.has_b1) {
          ctx.model->b1({&pos, 1}, drift_span);
          prop += dr * ctx.dt;
        }
        if (mean_pull) prop += ctx.coeff * (mean0 - pos) * ctx.dt;
        prop += ctx.sig_step * xi;
        if (!ctx.full_space) {
          const double inside = prop < blo ? blo : (prop > bhi ? bhi : prop);
          e.local_time[i] += std::abs(prop - inside);
          prop = inside;
        }
        if (!std::isfinite(prop))
          throw RuntimeFailure("simulation blow-up: non-finite position for particle " +
                               std::to_string(i) + " at time " + format_double(e.time));
        e.x[i] = prop;
      }
    });
  } else {
    parallel_for(e.n, workers, [&](std::size_t lo, std::size_t hi) {
      Vec scratch;
      double xi[8];
      Vec xi_dyn;
      double* xp = xi;
      if (ctx.m > 8) {
        xi_dyn.resize(ctx.m);
        xp = xi_dyn.data();
      }
      for (std::size_t i = lo; i < hi; ++i) {
        for (int k = 0; k < ctx.m; ++k)
          xp[k] = rng::normal_at(e.seed, e.noise_stream, i, draw_base + static_cast<std::uint64_t>(k));
        const double dl = advance_one(ctx, {e.x.data() + i * ctx.d, static_cast<std::size_t>(ctx.d)},
                                      {xp, static_cast<std::size_t>(ctx.m)}, scratch);
        e.local_time[i] += dl;
        check_finite(e, i);
      }
    });
  }
  ++e.step_index;
  e.time += dt;
}

Observer moment_observer() {
  return [](const Ensemble& e, Observation& o) {
    for (int k = 0; k < e.dim; ++k) {
      const double m = pairwise_sum(e.n, [&](std::size_t i) { return e.x[i * e.dim + k]; }) /
                       static_cast<double>(e.n);
      const double v = pairwise_sum(e.n, [&](std::size_t i) {
                         const double c = e.x[i * e.dim + k] - m;
                         return c * c;
                       }) /
                       static_cast<double>(e.n > 1 ? e.n - 1 : 1);
      o.stats.emplace_back("mean_" + std::to_string(k), m);
      o.stats.emplace_back("var_" + std::to_string(k), v);
    }
  };
}

Observer local_time_observer() {
  return [](const Ensemble& e, Observation& o) {
    const double m = pairwise_sum(e.local_time) / static_cast<double>(e.n);
    o.stats.emplace_back("mean_local_time", m);
  };
}

namespace {
std::uint64_t schedule_steps(double dt, double t_final) {
  if (!(t_final > 0.0)) throw InvalidArgument("simulate: t_final must be positive");
  return static_cast<std::uint64_t>(std::llround(t_final / dt));
}
}  // namespace

Trajectory simulate(Ensemble& e, const ModelSpec& model, const DomainGeometry& domain, double dt,
                    double t_final, double observe_every, const std::vector<Observer>& observers,
                    int workers, bool keep_snapshots) {
  const std::uint64_t steps = schedule_steps(dt, t_final);
  const std::uint64_t stride =
      observe_every > 0.0 ? std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(observe_every / dt)))
                          : steps;
  Trajectory traj;
  auto observe = [&] {
    Observation o;
    o.time = e.time;
    for (const auto& obs : observers) obs(e, o);
    traj.rows.push_back(std::move(o));
    if (keep_snapshots) traj.snapshots.emplace_back(e.time, e.x);
  };
  observe();
  for (std::uint64_t s = 0; s < steps; ++s) {
    step(e, model, domain, dt, workers);
    if ((s + 1) % stride == 0 || s + 1 == steps) observe();
  }
  return traj;
}

CoupledEnsemble make_coupled(Ensemble x, Ensemble y, CouplingMode mode, double meet_tolerance) {
  if (x.dim != y.dim || x.n != y.n)
    throw InvalidArgument("make_coupled: ensembles must share dimension and size");
  if (!(meet_tolerance >= 0.0)) throw InvalidArgument("make_coupled: meet_tolerance must be >= 0");
  CoupledEnsemble ce;
  ce.coupled.assign(x.n, 0);
  ce.meet_time.assign(x.n, -1.0);
  ce.mode = mode;
  ce.meet_tolerance = meet_tolerance;
  ce.x = std::move(x);
  ce.y = std::move(y);
  return ce;
}

void coupled_step(CoupledEnsemble& ce, const ModelSpec& model, const DomainGeometry& domain,
                  double dt, int workers) {
  Ensemble& ex = ce.x;
  Ensemble& ey = ce.y;
  if (ex.n != ey.n || ex.dim != ey.dim)
    throw InvalidArgument("coupled_step: ensemble sides disagree");
  const int d = ex.dim;
  if (ce.mode == CouplingMode::reflection) {
    // The distance-reflected noise acts on the isotropic diffusion component.
    if (!model.sigma.scalar && (!model.sigma.alpha || !(*model.sigma.alpha > 0.0)))
      throw InvalidArgument("coupled_step: reflection mode needs an isotropic sigma component");
  }
  const double meet_thresh = ce.meet_tolerance * std::sqrt(dt);
  for (std::size_t i = 0; i < ex.n; ++i) {
    if (ce.coupled[i]) continue;
    const double dist = dist2({ex.x.data() + i * d, static_cast<std::size_t>(d)},
                              {ey.x.data() + i * d, static_cast<std::size_t>(d)});
    if (dist <= meet_thresh) {
      ce.coupled[i] = 1;
      ce.meet_time[i] = ex.time;
      for (int k = 0; k < d; ++k) ey.x[i * d + k] = ex.x[i * d + k];
    }
  }
  const StepCtx cx = make_ctx(ex, model, domain, dt);
  const StepCtx cy = make_ctx(ey, model, domain, dt);
  const bool scalar = model.sigma.scalar;
  const int m = noise_dim_of(model);
  const int mh = model.sigma.hat_dim;
  const int stride = scalar ? m : (ce.mode == CouplingMode::reflection ? d + mh : m);
  const std::uint64_t draw_base = ex.step_index * static_cast<std::uint64_t>(stride);
  const double alpha = ce.mode == CouplingMode::reflection ? model.isotropic_alpha() : 0.0;
  const double sqalpha_dt = std::sqrt(alpha) * std::sqrt(dt);
  const double sqdt = std::sqrt(dt);
  parallel_for(ex.n, workers, [&](std::size_t lo, std::size_t hi) {
    Vec scr_x, scr_y;
    Vec xiv(static_cast<std::size_t>(stride)), xir(static_cast<std::size_t>(d));
    Vec pre_x(d), pre_y(d), u(d), disp(d), hat(static_cast<std::size_t>(d) * std::max(mh, 1));
    const bool decomposed = !scalar && ce.mode == CouplingMode::reflection;
    // Assembles sqrt(alpha) xiA + hat(at) xiB for the decomposed-noise route.
    auto assemble = [&](std::span<const double> at, const double* xi_iso) {
      if (model.sigma.hat && mh > 0) {
        model.sigma.hat(at, {hat.data(), static_cast<std::size_t>(d) * mh});
      }
      for (int r = 0; r < d; ++r) {
        double s = sqalpha_dt * xi_iso[r];
        for (int k = 0; k < mh; ++k) s += sqdt * hat[static_cast<std::size_t>(r) * mh + k] * xiv[d + k];
        disp[r] = s;
      }
    };
    for (std::size_t i = lo; i < hi; ++i) {
      std::span<double> px{ex.x.data() + i * d, static_cast<std::size_t>(d)};
      std::span<double> py{ey.x.data() + i * d, static_cast<std::size_t>(d)};
      for (int k = 0; k < d; ++k) {
        pre_x[k] = px[k];
        pre_y[k] = py[k];
      }
      for (int k = 0; k < stride; ++k)
        xiv[k] = rng::normal_at(ex.seed, ex.noise_stream, i, draw_base + static_cast<std::uint64_t>(k));
      double dlx;
      if (!decomposed) {
        dlx = advance_one(cx, px, {xiv.data(), static_cast<std::size_t>(m)}, scr_x);
      } else {
        // Equal in law to sigma(x) dW but assembled from the isotropic and
        // residual blocks so the y side can mirror the isotropic part.
        assemble(pre_x, xiv.data());
        dlx = advance_one(cx, px, {}, scr_x, disp);
      }
      if (ce.coupled[i]) {
        for (int k = 0; k < d; ++k) py[k] = px[k];
        ey.local_time[i] += dlx;
      } else if (ce.mode == CouplingMode::synchronous) {
        const double dly = advance_one(cy, py, {xiv.data(), static_cast<std::size_t>(m)}, scr_y);
        ey.local_time[i] += dly;
      } else {
        // Reflect the isotropic noise across the unit vector between the pair.
        double nrm = 0.0;
        for (int k = 0; k < d; ++k) {
          u[k] = pre_x[k] - pre_y[k];
          nrm += u[k] * u[k];
        }
        nrm = std::sqrt(nrm);
        double proj = 0.0;
        for (int k = 0; k < d; ++k) {
          u[k] /= nrm;
          proj += u[k] * xiv[k];
        }
        for (int k = 0; k < d; ++k) xir[k] = xiv[k] - 2.0 * proj * u[k];
        double dly;
        if (!decomposed) {
          dly = advance_one(cy, py, {xir.data(), static_cast<std::size_t>(d)}, scr_y);
        } else {
          assemble(pre_y, xir.data());
          dly = advance_one(cy, py, {}, scr_y, disp);
        }
        ey.local_time[i] += dly;
      }
      ex.local_time[i] += dlx;
      check_finite(ex, i);
      check_finite(ey, i);
    }
  });
  ++ex.step_index;
  ++ey.step_index;
  ex.time += dt;
  ey.time += dt;
}

CouplingStats coupling_statistics(const CoupledEnsemble& ce, const std::function<double(double)>& psi) {
  const int d = ce.x.dim;
  CouplingStats s;
  s.time = ce.x.time;
  const double n = static_cast<double>(ce.x.n);
  s.fraction_coupled =
      pairwise_sum(ce.x.n, [&](std::size_t i) { return ce.coupled[i] ? 1.0 : 0.0; }) / n;
  s.mean_distance = pairwise_sum(ce.x.n, [&](std::size_t i) {
                      return dist2({ce.x.x.data() + i * d, static_cast<std::size_t>(d)},
                                   {ce.y.x.data() + i * d, static_cast<std::size_t>(d)});
                    }) /
                    n;
  if (psi) {
    s.psi_moment = pairwise_sum(ce.x.n, [&](std::size_t i) {
                     return psi(dist2({ce.x.x.data() + i * d, static_cast<std::size_t>(d)},
                                      {ce.y.x.data() + i * d, static_cast<std::size_t>(d)}));
                   }) /
                   n;
  }
  return s;
}

CoupledTrajectory coupled_simulate(CoupledEnsemble& ce, const ModelSpec& model,
                                   const DomainGeometry& domain, double dt, double t_final,
                                   double observe_every, const std::function<double(double)>& psi,
                                   int workers) {
  const std::uint64_t steps = schedule_steps(dt, t_final);
  const std::uint64_t stride =
      observe_every > 0.0 ? std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(observe_every / dt)))
                          : steps;
  CoupledTrajectory traj;
  traj.rows.push_back(coupling_statistics(ce, psi));
  for (std::uint64_t s = 0; s < steps; ++s) {
    coupled_step(ce, model, domain, dt, workers);
    if ((s + 1) % stride == 0 || s + 1 == steps) traj.rows.push_back(coupling_statistics(ce, psi));
  }
  return traj;
}

}  // namespace mvsde
