#include "mvsde/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <utility>

#include "mvsde/csvio.hpp"
#include "mvsde/pde.hpp"
#include "mvsde/rates.hpp"
#include "mvsde/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mvsde {

double evaluate_metric(const MetricConfig& mc, const EmpiricalMeasure& a,
                       const EmpiricalMeasure& b) {
  if (mc.name == "w1" || mc.name == "w2" || mc.name == "wp") {
    const double p = mc.name == "w1" ? 1.0 : (mc.name == "w2" ? 2.0 : mc.p);
    if (a.dim == 1) return wp_quantile_1d(a, b, p);
    if (a.n == b.n && a.n <= 2048 && a.uniform() && b.uniform()) return wp_exact(a, b, p);
    return wp_sinkhorn(a, b, p).value;
  }
  if (mc.name == "wpsi") return w_psi(a, b, psi_by_name(mc.psi).psi);
  if (mc.name == "tv")
    return weighted_variation(a, b, [](std::span<const double>) { return 1.0; });
  if (mc.name == "entropy") return relative_entropy(a, b);
  throw InvalidArgument("unknown metric: " + mc.name);
}

namespace {

struct MetricContext {
  EmpiricalMeasure reference;
  double noise_floor = 0.0;
};

// The floor is the metric between two fresh samples of the reference law at
// the sizes actually compared; decay below it is unresolvable at this N.
MetricContext make_reference(const MetricConfig& mc, int dim, std::size_t n_particles) {
  MetricContext ctx;
  const std::size_t n_ref = mc.n_reference ? mc.n_reference : n_particles;
  ctx.reference = sample_gaussian_reference(dim, mc.ref_mean, mc.ref_stddev, n_ref, mc.ref_seed);
  const EmpiricalMeasure a =
      sample_gaussian_reference(dim, mc.ref_mean, mc.ref_stddev, n_particles, mc.ref_seed + 1000003);
  const EmpiricalMeasure b =
      sample_gaussian_reference(dim, mc.ref_mean, mc.ref_stddev, n_ref, mc.ref_seed + 2000003);
  ctx.noise_floor = evaluate_metric(mc, a, b);
  return ctx;
}

void write_table(const std::string& dir, const std::string& name, const CsvTable& t,
                 std::vector<std::string>& files) {
  write_csv(dir + "/" + name, t);
  files.push_back(name);
}

CsvTable rate_table() {
  CsvTable t;
  t.header = {"metric", "c",       "lambda",      "r_squared", "t_begin",
              "t_end",  "points_used", "noise_floor", "reliable"};
  return t;
}

void append_fit(CsvTable& t, const std::string& metric, const Vec& times, const Vec& values,
                double floor, double burn_in) {
  RateCertificate rc;
  try {
    rc = fit_rate(times, values, floor, burn_in);
  } catch (const InvalidArgument&) {
    return;  // not enough usable points above the floor; no certificate
  }
  t.rows.push_back({metric, format_cell(rc.c), format_cell(rc.lambda), format_cell(rc.r_squared),
                    format_cell(rc.t_begin), format_cell(rc.t_end), std::to_string(rc.points_used),
                    format_cell(rc.noise_floor), rc.reliable ? "1" : "0"});
}

void run_simulate(const ExperimentConfig& cfg, int workers, const std::string& dir,
                  std::vector<std::string>& files) {
  const IntegratorConfig& ic = cfg.integrator;
  Ensemble e = init_ensemble(cfg.domain, cfg.init_a, ic.n_particles, ic.seed, rng::kStreamInitX,
                             rng::kStreamNoiseX);
  std::vector<MetricContext> ctx;
  ctx.reserve(cfg.metrics.size());
  for (const MetricConfig& mc : cfg.metrics)
    ctx.push_back(make_reference(mc, cfg.model.dim, ic.n_particles));

  std::vector<Observer> obs{moment_observer(), local_time_observer()};
  if (!cfg.metrics.empty()) {
    obs.push_back([&](const Ensemble& en, Observation& o) {
      const EmpiricalMeasure mu = measure_of(en);
      for (std::size_t k = 0; k < cfg.metrics.size(); ++k)
        o.stats.emplace_back("metric:" + cfg.metrics[k].name,
                             evaluate_metric(cfg.metrics[k], mu, ctx[k].reference));
    });
  }
  const Trajectory tr = simulate(e, cfg.model, cfg.domain, ic.dt, ic.t_final, ic.observe_every,
                                 obs, workers, ic.snapshots);

  CsvTable traj;
  traj.header = {"time", "statistic", "value"};
  CsvTable dist;
  dist.header = {"time", "metric", "value", "noise_floor"};
  std::vector<Vec> times(cfg.metrics.size()), values(cfg.metrics.size());
  for (const Observation& row : tr.rows) {
    std::size_t k = 0;
    for (const auto& [stat, v] : row.stats) {
      if (stat.rfind("metric:", 0) == 0) {
        dist.rows.push_back({format_cell(row.time), stat.substr(7), format_cell(v),
                             format_cell(ctx[k].noise_floor)});
        times[k].push_back(row.time);
        values[k].push_back(v);
        ++k;
      } else {
        traj.rows.push_back({format_cell(row.time), stat, format_cell(v)});
      }
    }
  }
  write_table(dir, "trajectory.csv", traj, files);
  if (!cfg.metrics.empty()) {
    write_table(dir, "distances.csv", dist, files);
    CsvTable rate = rate_table();
    for (std::size_t k = 0; k < cfg.metrics.size(); ++k)
      append_fit(rate, cfg.metrics[k].name, times[k], values[k],
                 ctx[k].noise_floor * cfg.rate_fit.noise_floor_multiplier,
                 cfg.rate_fit.burn_in_fraction);
    write_table(dir, "rate.csv", rate, files);
  }
  if (ic.snapshots) {
    CsvTable snap;
    snap.header = {"time", "particle_index"};
    for (int d = 0; d < cfg.model.dim; ++d) snap.header.push_back("x" + std::to_string(d));
    for (const auto& [t, x] : tr.snapshots) {
      const std::size_t n = x.size() / static_cast<std::size_t>(cfg.model.dim);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> row{format_cell(t), std::to_string(i)};
        for (int d = 0; d < cfg.model.dim; ++d)
          row.push_back(format_cell(x[i * cfg.model.dim + d]));
        snap.rows.push_back(std::move(row));
      }
    }
    write_table(dir, "snapshots.csv", snap, files);
  }
}

void run_couple(const ExperimentConfig& cfg, int workers, const std::string& dir,
                std::vector<std::string>& files) {
  const IntegratorConfig& ic = cfg.integrator;
  Ensemble x = init_ensemble(cfg.domain, cfg.init_a, ic.n_particles, ic.seed, rng::kStreamInitX,
                             rng::kStreamNoiseX);
  Ensemble y = init_ensemble(cfg.domain, cfg.has_init_b ? cfg.init_b : cfg.init_a, ic.n_particles,
                             ic.seed, rng::kStreamInitY, rng::kStreamNoiseY);
  CoupledEnsemble ce = make_coupled(std::move(x), std::move(y), cfg.coupling.mode,
                                    cfg.coupling.meet_tolerance);
  const PsiProfile prof = psi_by_name(cfg.coupling.psi);
  const CoupledTrajectory tr = coupled_simulate(ce, cfg.model, cfg.domain, ic.dt, ic.t_final,
                                                ic.observe_every, prof.psi, workers);

  CsvTable cp;
  cp.header = {"time", "fraction_coupled", "mean_distance", "psi_moment"};
  Vec times, dist, psim;
  for (const CouplingStats& s : tr.rows) {
    cp.rows.push_back({format_cell(s.time), format_cell(s.fraction_coupled),
                       format_cell(s.mean_distance), format_cell(s.psi_moment)});
    times.push_back(s.time);
    dist.push_back(s.mean_distance);
    psim.push_back(s.psi_moment);
  }
  write_table(dir, "coupling.csv", cp, files);
  CsvTable rate = rate_table();
  append_fit(rate, "mean_distance", times, dist, 0.0, cfg.rate_fit.burn_in_fraction);
  append_fit(rate, "psi_moment", times, psim, 0.0, cfg.rate_fit.burn_in_fraction);
  write_table(dir, "rate.csv", rate, files);
}

DensityGrid grid_from_init(double a, double b, int m, const InitSpec& init) {
  switch (init.kind) {
    case InitKind::dirac: {
      DensityGrid g = make_uniform_grid(a, b, m);
      std::fill(g.rho.begin(), g.rho.end(), 0.0);
      const double x = init.point.at(0);
      const int idx = std::clamp(static_cast<int>(std::floor((x - a) / g.h())), 0, m - 1);
      g.rho[idx] = 1.0 / g.h();
      return g;
    }
    case InitKind::uniform_box: {
      DensityGrid g = make_uniform_grid(a, b, m);
      const double lo = init.lo.at(0), hi = init.hi.at(0);
      const double h = g.h();
      double total = 0.0;
      for (int i = 0; i < m; ++i) {
        const double l = a + i * h, r = l + h;
        const double ov = std::max(0.0, std::min(hi, r) - std::max(lo, l));
        g.rho[i] = ov;  // overlap length; normalised below
        total += ov * h;
      }
      if (!(total > 0.0))
        throw InvalidArgument("pde: initial box does not intersect the grid interval");
      for (double& v : g.rho) v /= total;
      return g;
    }
    case InitKind::gaussian: {
      const double mu = init.mean.at(0), sd = init.stddev.at(0);
      if (!(sd > 0.0)) throw InvalidArgument("pde: gaussian init needs a positive stddev");
      return make_grid_from(a, b, m, [mu, sd](double x) {
        const double z = (x - mu) / sd;
        return std::exp(-0.5 * z * z);
      });
    }
    case InitKind::points: {
      DensityGrid g = make_uniform_grid(a, b, m);
      std::fill(g.rho.begin(), g.rho.end(), 0.0);
      const std::size_t n = init.points.size();
      if (n == 0) throw InvalidArgument("pde: points init is empty");
      for (std::size_t i = 0; i < n; ++i) {
        const int idx =
            std::clamp(static_cast<int>(std::floor((init.points[i] - a) / g.h())), 0, m - 1);
        g.rho[idx] += 1.0;
      }
      for (double& v : g.rho) v /= static_cast<double>(n) * g.h();
      return g;
    }
  }
  throw InvalidArgument("pde: unsupported initial law");
}

void run_pde(const ExperimentConfig& cfg, int workers, const std::string& dir,
             std::vector<std::string>& files) {
  const PdeSettings& ps = cfg.pde;
  if (ps.t_max <= ps.t_final)
    throw InvalidArgument("pde: t_max must exceed t_final to search for a steady state");
  const double a = cfg.domain.box_lo()[0], b = cfg.domain.box_hi()[0];
  DensityGrid g = grid_from_init(a, b, ps.cells, cfg.init_a);
  PdeOptions popt;
  popt.diffusion = ps.diffusion;
  popt.workers = workers;
  const double dt = ps.dt > 0.0 ? ps.dt : suggest_dt(g, cfg.model, popt);

  CsvTable dens;
  dens.header = {"time", "cell_center", "density"};
  std::vector<DensityGrid> snaps;
  const auto record = [&](const DensityGrid& gr) {
    for (int i = 0; i < gr.m; ++i)
      dens.rows.push_back(
          {format_cell(gr.time), format_cell(gr.center(i)), format_cell(gr.rho[i])});
    snaps.push_back(gr);
  };
  record(g);
  const int blocks = std::max(1, static_cast<int>(std::ceil(ps.t_final / ps.observe_every - 1e-9)));
  for (int k = 1; k <= blocks; ++k) {
    const double target = std::min(k * ps.observe_every, ps.t_final);
    advance(g, cfg.model, dt, target, popt);
    record(g);
  }
  write_table(dir, "density.csv", dens, files);

  // The steady-state search continues from the terminal density.
  const SteadyStateResult ss = steady_state(g, cfg.model, dt, ps.steady_tol, ps.t_max, popt);
  CsvTable steady;
  steady.header = {"cell_center", "density"};
  for (int i = 0; i < ss.grid.m; ++i)
    steady.rows.push_back({format_cell(ss.grid.center(i)), format_cell(ss.grid.rho[i])});
  write_table(dir, "steady.csv", steady, files);
  CsvTable meta;
  meta.header = {"key", "value"};
  meta.rows.push_back({"converged", ss.converged ? "1" : "0"});
  meta.rows.push_back({"residual", format_cell(ss.residual)});
  meta.rows.push_back({"time", format_cell(ss.time)});
  meta.rows.push_back({"dt", format_cell(dt)});
  write_table(dir, "steady_meta.csv", meta, files);

  CsvTable summary;
  summary.header = {"time", "l1_to_steady"};
  Vec times, l1s;
  for (const DensityGrid& s : snaps) {
    const double l1 = l1_distance(s, ss.grid);
    summary.rows.push_back({format_cell(s.time), format_cell(l1)});
    times.push_back(s.time);
    l1s.push_back(l1);
  }
  write_table(dir, "summary.csv", summary, files);
  CsvTable rate = rate_table();
  append_fit(rate, "l1_to_steady", times, l1s, ps.steady_tol * cfg.rate_fit.noise_floor_multiplier,
             cfg.rate_fit.burn_in_fraction);
  write_table(dir, "rate.csv", rate, files);
}

std::function<ModelSpec(const EmpiricalMeasure&)> make_freeze(const ModelSpec& model) {
  using Kind = InteractionKernel::Kind;
  if (model.kernel.kind == Kind::none)
    return [model](const EmpiricalMeasure&) { return model; };
  if (model.kernel.kind != Kind::linear)
    throw ConfigError(
        "fixed_point: only linear interaction kernels are supported; general kernels "
        "need the full particle system");
  return [model](const EmpiricalMeasure& mu) {
    ModelSpec frozen = model;
    frozen.kernel = InteractionKernel{};
    const Vec mbar = mu.mean();
    const double c = model.kernel.coeff;
    const int d = model.dim;
    const VectorField base = model.b1;
    frozen.b1 = [base, mbar, c, d](std::span<const double> x, std::span<double> out) {
      if (base)
        base(x, out);
      else
        std::fill(out.begin(), out.end(), 0.0);
      for (int i = 0; i < d; ++i) out[i] += c * (mbar[i] - x[i]);
    };
    return frozen;
  };
}

void run_fixed_point(const ExperimentConfig& cfg, int workers, const std::string& dir,
                     std::vector<std::string>& files) {
  const FixedPointSettings& fp = cfg.fixed_point;
  FixedPointOptions opt;
  opt.n_particles = fp.n_particles ? fp.n_particles : cfg.integrator.n_particles;
  opt.dt = fp.dt > 0.0 ? fp.dt : cfg.integrator.dt;
  opt.t_stat = fp.t_stat;
  opt.tol = fp.tol;
  opt.max_iters = fp.max_iters;
  opt.seed = cfg.integrator.seed;
  opt.workers = workers;
  opt.init = cfg.init_a;
  const FixedPointResult res = fixed_point_measure(make_freeze(cfg.model), cfg.domain, opt);

  CsvTable gaps;
  gaps.header = {"iteration", "gap"};
  for (std::size_t i = 0; i < res.gap_history.size(); ++i)
    gaps.rows.push_back({std::to_string(i + 1), format_cell(res.gap_history[i])});
  write_table(dir, "fixed_point.csv", gaps, files);

  CsvTable pts;
  pts.header = {"particle_index"};
  for (int d = 0; d < cfg.model.dim; ++d) pts.header.push_back("x" + std::to_string(d));
  for (std::size_t i = 0; i < res.measure.n; ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (int d = 0; d < cfg.model.dim; ++d) row.push_back(format_cell(res.measure.point(i)[d]));
    pts.rows.push_back(std::move(row));
  }
  write_table(dir, "points.csv", pts, files);

  CsvTable summary;
  summary.header = {"key", "value"};
  summary.rows.push_back({"converged", res.converged ? "1" : "0"});
  summary.rows.push_back({"iterations", std::to_string(res.iterations)});
  summary.rows.push_back(
      {"final_gap", format_cell(res.gap_history.empty() ? 0.0 : res.gap_history.back())});
  write_table(dir, "summary.csv", summary, files);
}

void write_manifest(const ExperimentConfig& cfg, const std::string& dir,
                    const std::vector<std::string>& files, const std::string& path) {
  json m;
  m["name"] = cfg.name;
  m["kind"] = cfg.kind;
  m["version"] = "0.1.0";
  m["config"] = cfg.raw;
  m["config_sha256"] = sha256_hex(cfg.raw.dump());
  json outs = json::object();
  for (const std::string& f : files) outs[f] = sha256_file(dir + "/" + f);
  m["outputs"] = outs;
  json tol = json::object();
  for (const MetricConfig& mc : cfg.metrics)
    if (mc.tolerance > 0.0) tol[mc.name] = mc.tolerance;
  m["tolerances"] = tol;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path);
  out << m.dump(2) << "\n";
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, int workers) {
  if (workers < 1) throw InvalidArgument("run_experiment: workers must be >= 1");
  {
    std::set<std::string> seen;
    for (const MetricConfig& mc : cfg.metrics)
      if (!seen.insert(mc.name).second)
        throw ConfigError("config: duplicate metric name '" + mc.name + "'");
    if (!cfg.rate_fit.metric.empty() && !seen.count(cfg.rate_fit.metric))
      throw ConfigError("config: rate_fit.metric '" + cfg.rate_fit.metric +
                        "' is not a configured metric");
  }
  fs::create_directories(cfg.output_dir);
  RunResult rr;
  rr.output_dir = cfg.output_dir;
  if (cfg.kind == "simulate")
    run_simulate(cfg, workers, cfg.output_dir, rr.files);
  else if (cfg.kind == "couple")
    run_couple(cfg, workers, cfg.output_dir, rr.files);
  else if (cfg.kind == "pde")
    run_pde(cfg, workers, cfg.output_dir, rr.files);
  else if (cfg.kind == "fixed_point")
    run_fixed_point(cfg, workers, cfg.output_dir, rr.files);
  else
    throw ConfigError("config: unknown experiment kind '" + cfg.kind + "'");
  // The manifest is written last so a complete manifest certifies a complete run.
  rr.manifest_path = cfg.output_dir + "/manifest.json";
  write_manifest(cfg, cfg.output_dir, rr.files, rr.manifest_path);
  return rr;
}

namespace {

json load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open manifest: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("manifest " + path + ": " + e.what());
  }
}

bool parse_num(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// Columns the declared per-metric tolerances apply to; everything else is
// bookkeeping (counts, window bounds) and never turns a comparison red.
bool tolerance_column(const std::string& name) {
  return name == "value" || name == "lambda" || name == "c";
}

void compare_file(const std::string& name, const std::string& pa, const std::string& pb,
                  const std::function<double(const std::string&)>& tol_for, CompareReport& rep) {
  const CsvTable ta = read_csv(pa);
  const CsvTable tb = read_csv(pb);
  const auto structural = [&](const std::string& what) {
    rep.entries.push_back(
        {name, what, std::numeric_limits<double>::infinity(), 0.0, false, true});
  };
  if (ta.header != tb.header || ta.rows.size() != tb.rows.size()) {
    structural("layout");
    return;
  }
  int gcol = -1;
  for (const char* c : {"metric", "statistic", "key"}) {
    const int i = ta.column(c);
    if (i >= 0) {
      gcol = i;
      break;
    }
  }
  const int floor_col = ta.column("noise_floor");
  std::set<int> skip;
  if (gcol >= 0) skip.insert(gcol);
  if (floor_col >= 0) skip.insert(floor_col);
  std::vector<int> coords;
  for (const char* c : {"time", "cell_center", "particle_index", "iteration"}) {
    const int i = ta.column(c);
    if (i >= 0 && i != gcol) {
      coords.push_back(i);
      skip.insert(i);
    }
  }

  struct Acc {
    double diff = 0.0;
    double band = 0.0;
    bool has_band = false;
  };
  std::map<std::pair<std::string, std::string>, Acc> acc;
  for (std::size_t r = 0; r < ta.rows.size(); ++r) {
    const auto& ra = ta.rows[r];
    const auto& rb = tb.rows[r];
    if (gcol >= 0 && ra[gcol] != rb[gcol]) {
      structural("row order");
      return;
    }
    for (const int c : coords)
      if (ra[c] != rb[c]) {
        structural("row order");
        return;
      }
    const std::string gkey = gcol >= 0 ? ra[gcol] : std::string();
    double band = 0.0;
    if (floor_col >= 0) {
      double fa = 0.0, fb = 0.0;
      parse_num(ra[floor_col], fa);
      parse_num(rb[floor_col], fb);
      band = 3.0 * std::max(fa, fb);
    }
    for (std::size_t c = 0; c < ra.size(); ++c) {
      if (skip.count(static_cast<int>(c))) continue;
      double va = 0.0, vb = 0.0;
      const bool na = parse_num(ra[c], va), nb = parse_num(rb[c], vb);
      if (!na || !nb) {
        if (ra[c] != rb[c]) {
          structural("non-numeric cell " + ta.header[c]);
          return;
        }
        continue;
      }
      Acc& a = acc[{gkey, ta.header[c]}];
      a.diff = std::max(a.diff, std::abs(va - vb));
      if (band > 0.0 && tolerance_column(ta.header[c])) {
        a.has_band = true;
        a.band = std::max(a.band, band);
      }
    }
  }
  for (const auto& [gk, a] : acc) {
    DiffEntry e;
    e.file = name;
    e.key = gk.first.empty() ? gk.second : gk.first + "/" + gk.second;
    e.max_abs_diff = a.diff;
    e.within_noise = a.has_band && a.diff <= a.band;
    const double tol = tolerance_column(gk.second) ? tol_for(gk.first.empty() ? gk.second : gk.first) : 0.0;
    // A difference inside the noise band is unresolvable at this sampling
    // noise and never red; beyond the band the declared tolerance decides,
    // and lacking one the band itself does.
    if (e.within_noise) {
      e.tolerance = tol > 0.0 ? tol : a.band;
    } else if (tol > 0.0) {
      e.tolerance = tol;
      e.flagged = a.diff > tol;
    } else if (a.has_band) {
      e.tolerance = a.band;
      e.flagged = true;
    }
    rep.entries.push_back(e);
  }
}

}  // namespace

CompareReport compare_runs(const std::string& manifest_a, const std::string& manifest_b) {
  const json A = load_manifest(manifest_a);
  const json B = load_manifest(manifest_b);
  if (!A.contains("outputs") || !B.contains("outputs"))
    throw InvalidArgument("compare_runs: manifest lacks an outputs map");
  const fs::path da = fs::path(manifest_a).parent_path();
  const fs::path db = fs::path(manifest_b).parent_path();
  const auto tol_for = [&](const std::string& key) -> double {
    for (const json* m : {&A, &B}) {
      const auto it = m->find("tolerances");
      if (it != m->end() && it->contains(key)) return it->at(key).get<double>();
    }
    return 0.0;
  };
  CompareReport rep;
  const json& oa = A.at("outputs");
  const json& ob = B.at("outputs");
  for (const auto& [f, h] : oa.items()) {
    if (!ob.contains(f)) {
      rep.entries.push_back({f, "only_in_first", 0.0, 0.0, false, false});
      rep.identical = false;
    }
  }
  for (const auto& [f, h] : ob.items()) {
    if (!oa.contains(f)) {
      rep.entries.push_back({f, "only_in_second", 0.0, 0.0, false, false});
      rep.identical = false;
    }
  }
  for (const auto& [f, h] : oa.items()) {
    if (!ob.contains(f)) continue;
    if (h.get<std::string>() == ob.at(f).get<std::string>()) continue;  // byte-identical
    rep.identical = false;
    compare_file(f, (da / f).string(), (db / f).string(), tol_for, rep);
  }
  for (const DiffEntry& e : rep.entries) rep.any_flagged = rep.any_flagged || e.flagged;
  return rep;
}

}  // namespace mvsde
