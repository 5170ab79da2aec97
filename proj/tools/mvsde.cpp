// Command-line front end: run configured experiments, evaluate distances and
// convergence-rate certificates, compare run directories, and check model
// assumptions.  Exit codes: 0 success, 1 bad input, 2 runtime failure,
// 3 a declared threshold or check failed.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mvsde/checks.hpp"
#include "mvsde/csvio.hpp"
#include "mvsde/experiment.hpp"
#include "mvsde/rates.hpp"

namespace fs = std::filesystem;
using namespace mvsde;

namespace {

int run_config_command(const std::string& config_path, const std::string& out_override,
                       const std::string& expected_kind, int workers) {
  ExperimentConfig cfg = load_config(config_path);
  if (cfg.kind != expected_kind)
    throw ConfigError("config kind is '" + cfg.kind + "' but the subcommand expects '" +
                      expected_kind + "'");
  if (!out_override.empty()) cfg.output_dir = out_override;
  const RunResult rr = run_experiment(cfg, workers);
  std::printf("wrote %zu artifacts to %s\n", rr.files.size(), rr.output_dir.c_str());
  std::printf("manifest: %s\n", rr.manifest_path.c_str());
  return 0;
}

EmpiricalMeasure read_points(const std::string& path) {
  const CsvTable t = read_csv(path);
  std::vector<Vec> cols;
  for (int d = 0;; ++d) {
    if (t.column("x" + std::to_string(d)) < 0) break;
    cols.push_back(numeric_column(t, "x" + std::to_string(d)));
  }
  if (cols.empty())
    throw InvalidArgument(path + ": expected coordinate columns x0, x1, ...");
  EmpiricalMeasure mu;
  mu.dim = static_cast<int>(cols.size());
  mu.n = cols[0].size();
  if (mu.n == 0) throw InvalidArgument(path + ": no data rows");
  mu.points.reserve(mu.n * cols.size());
  for (std::size_t i = 0; i < mu.n; ++i)
    for (const Vec& c : cols) mu.points.push_back(c[i]);
  return mu;
}

int cmd_metrics(const std::string& a_path, const std::string& b_path, const std::string& metric,
                double p, const std::string& psi, const std::string& ledger) {
  const EmpiricalMeasure a = read_points(a_path);
  const EmpiricalMeasure b = read_points(b_path);
  if (a.dim != b.dim) throw InvalidArgument("metrics: point clouds differ in dimension");
  MetricConfig mc;
  mc.name = metric;
  mc.p = p;
  mc.psi = psi;
  const double value = evaluate_metric(mc, a, b);
  std::printf("%s,%s\n", metric.c_str(), format_cell(value).c_str());
  if (!ledger.empty()) {
    const bool fresh = !fs::exists(ledger);
    std::ofstream out(ledger, std::ios::binary | std::ios::app);
    if (!out) throw RuntimeFailure("cannot open ledger " + ledger);
    if (fresh) out << "instance,metric,p,psi,value\n";
    const std::string inst =
        fs::path(a_path).filename().string() + "|" + fs::path(b_path).filename().string();
    out << inst << "," << metric << "," << format_cell(p) << "," << psi << ","
        << format_cell(value) << "\n";
  }
  return 0;
}

void print_row(const std::vector<std::string>& header, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < header.size(); ++i)
    std::printf("%s%s", header[i].c_str(), i + 1 < header.size() ? "," : "\n");
  for (std::size_t i = 0; i < row.size(); ++i)
    std::printf("%s%s", row[i].c_str(), i + 1 < row.size() ? "," : "\n");
}

int cmd_rates_fit(const std::string& input, const std::string& metric, bool floor_set,
                  double floor, double multiplier, double burn_in) {
  const CsvTable t = read_csv(input);
  const int mcol = t.column("metric");
  if (mcol >= 0 && metric.empty())
    throw InvalidArgument("rates fit: input has a metric column; choose one with --metric");
  Vec times, values, floors;
  const Vec all_t = numeric_column(t, "time");
  const Vec all_v = numeric_column(t, "value");
  const int fcol = t.column("noise_floor");
  Vec all_f;
  if (fcol >= 0) all_f = numeric_column(t, "noise_floor");
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (mcol >= 0 && t.rows[r][mcol] != metric) continue;
    times.push_back(all_t[r]);
    values.push_back(all_v[r]);
    if (fcol >= 0) floors.push_back(all_f[r]);
  }
  double used_floor = floor_set ? floor : 0.0;
  if (!floor_set && !floors.empty())
    used_floor = *std::max_element(floors.begin(), floors.end()) * multiplier;
  const RateCertificate rc = fit_rate(times, values, used_floor, burn_in);
  print_row({"metric", "c", "lambda", "r_squared", "t_begin", "t_end", "points_used",
             "noise_floor", "reliable"},
            {metric.empty() ? "value" : metric, format_cell(rc.c), format_cell(rc.lambda),
             format_cell(rc.r_squared), format_cell(rc.t_begin), format_cell(rc.t_end),
             std::to_string(rc.points_used), format_cell(rc.noise_floor),
             rc.reliable ? "1" : "0"});
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b) {
  const CompareReport rep = compare_runs(a, b);
  std::printf("file,key,max_abs_diff,tolerance,within_noise,flagged\n");
  for (const DiffEntry& e : rep.entries)
    std::printf("%s,%s,%s,%s,%d,%d\n", e.file.c_str(), e.key.c_str(),
                format_cell(e.max_abs_diff).c_str(), format_cell(e.tolerance).c_str(),
                e.within_noise ? 1 : 0, e.flagged ? 1 : 0);
  if (rep.identical)
    std::fprintf(stderr, "runs are identical\n");
  else if (rep.any_flagged)
    std::fprintf(stderr, "runs differ beyond tolerance\n");
  else
    std::fprintf(stderr, "runs differ within tolerance\n");
  return rep.any_flagged ? 3 : 0;
}

std::vector<Vec> grid_1d(double lo, double hi, int n) {
  std::vector<Vec> g;
  g.reserve(n);
  for (int i = 0; i < n; ++i) g.push_back({lo + (hi - lo) * i / (n - 1)});
  return g;
}

int cmd_check(const std::string& model_name, const std::string& psi_name) {
  if (model_name.empty() && psi_name.empty())
    throw InvalidArgument("check: give --model and/or --psi");
  bool all_pass = true;
  const auto report = [&](const std::string& what, const CheckReport& r) {
    std::printf("%s: %s (checked %zu points, min slack %.6g)\n", what.c_str(),
                r.pass ? "PASS" : "FAIL", r.checked, r.min_slack);
    for (std::size_t i = 0; i < r.violations.size() && i < 3; ++i) {
      const CheckViolation& v = r.violations[i];
      std::printf("  violated at x0=%.6g: lhs %.6g > rhs %.6g\n",
                  v.x.empty() ? 0.0 : v.x[0], v.lhs, v.rhs);
    }
    all_pass = all_pass && r.pass;
  };
  if (!model_name.empty()) {
    ModelSpec m;
    // Growth profile: quadratic drifts need phi(r) = 1 + r, cubic ones 1 + r^2.
    std::function<double(double)> phi = [](double r) { return 1.0 + r; };
    double c1 = 1.0, c2 = 0.5;
    if (model_name == "ou") {
      m = make_ou();
    } else if (model_name == "double_well") {
      m = make_double_well();
      phi = [](double r) { return 1.0 + r * r; };
    } else if (model_name == "granular_media") {
      m = make_granular_media();
      phi = [](double r) { return 1.0 + r * r; };
    } else if (model_name == "mean_field_ou") {
      m = make_mean_field_ou();
    } else if (model_name == "partial_dissipative") {
      m = make_partial_dissipative();
    } else if (model_name == "expanding") {
      // Negative control: b1(x) = +x violates every drift condition.
      m = make_ou();
      m.b1 = [](std::span<const double> x, std::span<double> out) { out[0] = x[0]; };
    } else {
      throw InvalidArgument("check: unknown model '" + model_name + "'");
    }
    const std::vector<Vec> grid = grid_1d(-5.0, 5.0, 101);
    report("b1_growth", check_b1_growth(m, phi, c1, c2, grid));
    LyapunovSpec ly;
    ly.V = [](std::span<const double> x) { return 1.0 + x[0] * x[0]; };
    ly.grad = [](std::span<const double> x, std::span<double> out) { out[0] = 2.0 * x[0]; };
    ly.hess = [](std::span<const double>, std::span<double> out) { out[0] = 2.0; };
    ly.Phi = [](double v) { return v; };
    ly.K = 10.0;
    ly.eps = 0.01;
    report("lyapunov", check_lyapunov(m, ly, grid));
  }
  if (!psi_name.empty()) {
    PsiProfile prof;
    if (psi_name == "quadratic") {
      // Convex profile; should be rejected by the concave-modulus check.
      prof.psi = [](double r) { return r * r; };
      prof.dpsi = [](double r) { return 2.0 * r; };
      prof.d2psi = [](double) { return 2.0; };
      prof.kappa = 1.0;
      prof.sup_dpsi = 20.0;
    } else {
      prof = psi_by_name(psi_name);
    }
    report("psi_class[" + psi_name + "]", check_psi_class(prof, 5.0));
  }
  return all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle and density solvers for reflected mean-field diffusions"};
  app.set_version_flag("--version", "0.1.0");
  app.require_subcommand(1);
  int workers = 1;
  app.add_option("--workers", workers, "Worker threads (outputs do not depend on this)")
      ->capture_default_str();

  std::string config_path, out_override;
  CLI::App* sim = app.add_subcommand("simulate", "Run a particle experiment from a config");
  CLI::App* cpl = app.add_subcommand("couple", "Run a two-ensemble coupling experiment");
  CLI::App* fxp = app.add_subcommand("fixed-point", "Iterate toward an invariant measure");
  CLI::App* pde = app.add_subcommand("pde", "Density evolution commands");
  CLI::App* pde_run = pde->add_subcommand("run", "Run a density-evolution experiment");
  pde->require_subcommand(1);
  for (CLI::App* c : {sim, cpl, fxp, pde_run}) {
    c->add_option("--config", config_path, "Experiment configuration (json)")->required();
    c->add_option("--output-dir", out_override, "Override the configured output directory");
  }

  std::string a_path, b_path, metric_name = "w2", psi_arg = "linear", ledger;
  double p_arg = 2.0;
  CLI::App* met = app.add_subcommand("metrics", "Distance between two point-cloud CSVs");
  met->add_option("--a", a_path, "First point cloud (columns x0, x1, ...)")->required();
  met->add_option("--b", b_path, "Second point cloud")->required();
  met->add_option("--metric", metric_name, "w1 | w2 | wp | wpsi | tv | entropy")
      ->capture_default_str();
  met->add_option("--p", p_arg, "Order for wp")->capture_default_str();
  met->add_option("--psi", psi_arg, "Profile for wpsi: linear | saturating_exp")
      ->capture_default_str();
  met->add_option("--out", ledger, "Append the result to this ledger CSV");

  CLI::App* rates = app.add_subcommand("rates", "Convergence-rate constants and fits");
  rates->require_subcommand(1);
  double r_alpha = 1.0, r_beta = 0.0, r_t0 = 0.5, r_t1 = 0.5;
  CLI::App* harris = rates->add_subcommand("harris", "Rate from a minorisation-drift cycle");
  harris->add_option("--alpha", r_alpha, "Minorisation mass in (0,1]")->required();
  harris->add_option("--beta", r_beta, "Drift defect in [0,2)")->required();
  harris->add_option("--t0", r_t0, "Drift phase length")->required();
  harris->add_option("--t1", r_t1, "Minorisation phase length")->required();
  double k_c = 2.0, k_lambda = 1.0;
  CLI::App* kap = rates->add_subcommand("kappa1", "Prefactor-to-sqrt-time constant");
  kap->add_option("--c", k_c, "Prefactor c > 1")->required();
  kap->add_option("--lambda", k_lambda, "Exponential rate")->required();
  double e_alpha = 1.0, e_t0 = 0.0, e_t1 = 0.0, e_t2 = 0.0, e_beta = 0.0, e_zeta = 0.0;
  CLI::App* env = rates->add_subcommand("envelope", "Rate from a radial drift envelope");
  env->add_option("--alpha", e_alpha, "Isotropic diffusion strength")->required();
  env->add_option("--theta0", e_t0, "Far-field dissipation lower bound")->required();
  env->add_option("--theta1", e_t1, "Envelope amplitude")->required();
  env->add_option("--theta2", e_t2, "Far-field dissipation upper bound")->required();
  env->add_option("--beta", e_beta, "Interaction strength")->required();
  env->add_option("--zeta", e_zeta, "Attraction range (0 for pure dissipation)")
      ->capture_default_str();
  double f_c = 2.0, f_lambda = 1.0, f_q = 2.0, f_k = -1.0;
  CLI::App* fb = rates->add_subcommand("feedback", "Rate under measure feedback");
  fb->add_option("--c", f_c, "Prefactor of the frozen-measure bound")->required();
  fb->add_option("--lambda", f_lambda, "Rate of the frozen-measure bound")->required();
  fb->add_option("--q", f_q, "Feedback exponent q >= 1")->required();
  fb->add_option("--k", f_k, "Feedback strength; omit for the largest admissible value");
  std::string fit_input, fit_metric;
  double fit_floor = 0.0, fit_mult = 3.0, fit_burn = 0.1;
  CLI::App* fit = rates->add_subcommand("fit", "Fit c * exp(-lambda t) to a decay CSV");
  fit->add_option("--input", fit_input, "CSV with time and value columns")->required();
  fit->add_option("--metric", fit_metric, "Metric to select when the CSV is long-format");
  CLI::Option* floor_opt =
      fit->add_option("--noise-floor", fit_floor, "Truncate the fit at this level");
  fit->add_option("--multiplier", fit_mult, "Floor multiplier when read from the CSV")
      ->capture_default_str();
  fit->add_option("--burn-in", fit_burn, "Fraction of the horizon to discard")
      ->capture_default_str();

  std::string cmp_a, cmp_b;
  CLI::App* cmp = app.add_subcommand("compare", "Compare two runs through their manifests");
  cmp->add_option("--a", cmp_a, "First manifest.json")->required();
  cmp->add_option("--b", cmp_b, "Second manifest.json")->required();

  std::string chk_model, chk_psi;
  CLI::App* chk = app.add_subcommand("check", "Check model and profile assumptions");
  chk->add_option("--model", chk_model,
                  "ou | double_well | granular_media | mean_field_ou | partial_dissipative | "
                  "expanding (negative control)");
  chk->add_option("--psi", chk_psi, "linear | saturating_exp | quadratic (negative control)");

  // Lets the global --workers appear after the subcommand name.
  for (CLI::App* c : {sim, cpl, fxp, pde, pde_run, met, rates, harris, kap, env, fb, fit, cmp, chk})
    c->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) return run_config_command(config_path, out_override, "simulate", workers);
    if (cpl->parsed()) return run_config_command(config_path, out_override, "couple", workers);
    if (fxp->parsed())
      return run_config_command(config_path, out_override, "fixed_point", workers);
    if (pde_run->parsed()) return run_config_command(config_path, out_override, "pde", workers);
    if (met->parsed())
      return cmd_metrics(a_path, b_path, metric_name, p_arg, psi_arg, ledger);
    if (harris->parsed()) {
      const HarrisRate hr = harris_rate(r_alpha, r_beta, r_t0, r_t1);
      print_row({"lambda", "step_factor"},
                {format_cell(hr.lambda), format_cell(hr.step_factor)});
      return 0;
    }
    if (kap->parsed()) {
      const Kappa1 k1 = kappa1(k_c, k_lambda);
      print_row({"value", "argmax_t"}, {format_cell(k1.value), format_cell(k1.arg)});
      return 0;
    }
    if (env->parsed()) {
      const RadialEnvelope re = radial_envelope_rate(e_alpha, e_t0, e_t1, e_t2, e_beta, e_zeta);
      print_row({"k", "tail_integral"}, {format_cell(re.k), format_cell(re.tail_integral)});
      return 0;
    }
    if (fb->parsed()) {
      if (fb->count("--k")) {
        const FeedbackConstants fc = feedback_constants(f_c, f_lambda, f_q, f_k);
        print_row({"t_hat", "delta_k", "lambda_prime", "valid"},
                  {format_cell(fc.t_hat), format_cell(fc.delta_k),
                   format_cell(fc.lambda_prime), fc.valid ? "1" : "0"});
      } else {
        print_row({"k_max"}, {format_cell(max_feedback_strength(f_c, f_lambda, f_q))});
      }
      return 0;
    }
    if (fit->parsed())
      return cmd_rates_fit(fit_input, fit_metric, floor_opt->count() > 0, fit_floor, fit_mult,
                           fit_burn);
    if (cmp->parsed()) return cmd_compare(cmp_a, cmp_b);
    if (chk->parsed()) return cmd_check(chk_model, chk_psi);
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
