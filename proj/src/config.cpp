#include "mvsde/config.hpp"

#include <cmath>
#include <fstream>

namespace mvsde {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

const json& member(const json& j, const std::string& path, const char* key) {
  if (!j.is_object()) fail(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(path + "/" + key, "missing required field");
  return *it;
}

double num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double num_or(const json& j, const std::string& path, const char* key, double dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  return num(j[key], path + "/" + key);
}

std::uint64_t uint_field(const json& j, const std::string& path, const char* key) {
  const json& v = member(j, path, key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    fail(path + "/" + key, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::string str(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::string str_or(const json& j, const std::string&, const char* key, const std::string& dflt) {
  if (!j.is_object() || !j.contains(key)) return dflt;
  return j[key].get<std::string>();
}

Vec vec(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Vec out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(num(j[i], path + "/" + std::to_string(i)));
  return out;
}

Vec vec_or(const json& j, const std::string& path, const char* key) {
  if (!j.is_object() || !j.contains(key)) return {};
  return vec(j[key], path + "/" + key);
}

DomainGeometry parse_domain(const json& j, const std::string& path) {
  const std::string type = str(member(j, path, "type"), path + "/type");
  if (type == "full_space") {
    const int dim = static_cast<int>(uint_field(j, path, "dim"));
    return DomainGeometry::full_space(dim);
  }
  if (type == "half_space")
    return DomainGeometry::half_space(vec(member(j, path, "normal"), path + "/normal"),
                                      num(member(j, path, "offset"), path + "/offset"));
  if (type == "ball")
    return DomainGeometry::ball(vec(member(j, path, "center"), path + "/center"),
                                num(member(j, path, "radius"), path + "/radius"));
  if (type == "box")
    return DomainGeometry::box(vec(member(j, path, "lo"), path + "/lo"),
                               vec(member(j, path, "hi"), path + "/hi"));
  if (type == "polytope") {
    const json& rows = member(j, path, "rows");
    if (!rows.is_array() || rows.empty()) fail(path + "/rows", "expected a non-empty array");
    std::vector<Vec> a;
    for (std::size_t i = 0; i < rows.size(); ++i)
      a.push_back(vec(rows[i], path + "/rows/" + std::to_string(i)));
    return DomainGeometry::polytope(a, vec(member(j, path, "rhs"), path + "/rhs"));
  }
  fail(path + "/type", "unknown domain type '" + type + "'");
}

// Piecewise-polynomial scalar field; pieces are checked in order, values
// outside every piece are zero.
struct PolyPiece {
  double from, to;
  Vec coeffs;
};

VectorField make_piecewise(std::vector<PolyPiece> pieces) {
  return [pieces = std::move(pieces)](std::span<const double> x, std::span<double> out) {
    const double v = x[0];
    out[0] = 0.0;
    for (const auto& p : pieces) {
      if (v < p.from || v > p.to) continue;
      double acc = 0.0;
      for (std::size_t k = p.coeffs.size(); k-- > 0;) acc = acc * v + p.coeffs[k];
      out[0] = acc;
      break;
    }
  };
}

ModelSpec parse_custom_model(const json& j, const std::string& path) {
  ModelSpec m;
  m.name = "custom";
  m.dim = 1;
  std::vector<PolyPiece> pieces;
  if (j.contains("b1_poly")) {
    pieces.push_back({-HUGE_VAL, HUGE_VAL, vec(j["b1_poly"], path + "/b1_poly")});
  } else if (j.contains("b1_pieces")) {
    const json& arr = j["b1_pieces"];
    if (!arr.is_array() || arr.empty()) fail(path + "/b1_pieces", "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = path + "/b1_pieces/" + std::to_string(i);
      pieces.push_back({num(member(arr[i], p, "from"), p + "/from"),
                        num(member(arr[i], p, "to"), p + "/to"),
                        vec(member(arr[i], p, "coeffs"), p + "/coeffs")});
    }
  } else {
    fail(path, "custom model needs b1_poly or b1_pieces");
  }
  m.b1 = make_piecewise(std::move(pieces));
  if (j.contains("kernel")) {
    const std::string kp = path + "/kernel";
    const std::string type = str(member(j["kernel"], kp, "type"), kp + "/type");
    if (type == "linear") {
      m.kernel.kind = InteractionKernel::Kind::linear;
      m.kernel.coeff = num(member(j["kernel"], kp, "coeff"), kp + "/coeff");
    } else if (type != "none") {
      fail(kp + "/type", "unknown kernel type '" + type + "' (config kernels: none, linear)");
    }
  }
  return m;
}

ModelSpec parse_model(const json& j, const std::string& path) {
  const std::string name = str(member(j, path, "name"), path + "/name");
  const double sigma = num_or(j, path, "sigma", 1.4142135623730951);
  ModelSpec m;
  if (name == "ou")
    m = make_ou(sigma);
  else if (name == "double_well")
    m = make_double_well(sigma);
  else if (name == "granular_media")
    m = make_granular_media(num_or(j, path, "beta", 0.1), sigma);
  else if (name == "mean_field_ou")
    m = make_mean_field_ou(num_or(j, path, "beta", 0.1), sigma);
  else if (name == "partial_dissipative")
    m = make_partial_dissipative(sigma);
  else if (name == "custom") {
    m = parse_custom_model(j, path);
    m.sigma.value = sigma;
    m.sigma.alpha = sigma * sigma;
  } else {
    fail(path + "/name", "unknown model '" + name + "'");
  }
  return m;
}

InitSpec parse_init(const json& j, const std::string& path) {
  InitSpec s;
  const std::string kind = str(member(j, path, "kind"), path + "/kind");
  if (kind == "dirac") {
    s.kind = InitKind::dirac;
    s.point = vec(member(j, path, "point"), path + "/point");
  } else if (kind == "uniform_box") {
    s.kind = InitKind::uniform_box;
    s.lo = vec(member(j, path, "lo"), path + "/lo");
    s.hi = vec(member(j, path, "hi"), path + "/hi");
  } else if (kind == "gaussian") {
    s.kind = InitKind::gaussian;
    s.mean = vec(member(j, path, "mean"), path + "/mean");
    s.stddev = vec(member(j, path, "stddev"), path + "/stddev");
  } else if (kind == "points") {
    s.kind = InitKind::points;
    s.points = vec(member(j, path, "points"), path + "/points");
  } else {
    fail(path + "/kind", "unknown initial law '" + kind + "'");
  }
  return s;
}

MetricConfig parse_metric(const json& j, const std::string& path) {
  MetricConfig m;
  m.name = str(member(j, path, "name"), path + "/name");
  if (m.name != "w1" && m.name != "w2" && m.name != "wp" && m.name != "wpsi" && m.name != "tv" &&
      m.name != "entropy")
    fail(path + "/name", "unknown metric '" + m.name + "'");
  m.p = num_or(j, path, "p", 2.0);
  m.psi = str_or(j, path, "psi", "linear");
  m.ref_mean = vec_or(j, path, "ref_mean");
  m.ref_stddev = vec_or(j, path, "ref_stddev");
  if (m.ref_mean.empty() || m.ref_stddev.empty())
    fail(path, "metric needs ref_mean and ref_stddev (Gaussian reference law)");
  if (j.contains("n_reference"))
    m.n_reference = static_cast<std::size_t>(uint_field(j, path, "n_reference"));
  m.ref_seed = uint_field(j, path, "ref_seed");
  m.tolerance = num_or(j, path, "tolerance", 0.0);
  return m;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  c.raw = j;
  c.name = str_or(j, "", "name", "experiment");
  c.kind = str_or(j, "", "kind", "simulate");
  if (c.kind != "simulate" && c.kind != "couple" && c.kind != "pde" && c.kind != "fixed_point")
    fail("/kind", "unknown experiment kind '" + c.kind + "'");
  c.domain = parse_domain(member(j, "", "domain"), "/domain");
  c.model = parse_model(member(j, "", "model"), "/model");
  if (c.model.dim != c.domain.dim())
    fail("/model", "model dimension does not match the domain");
  c.init_a = parse_init(member(j, "", "init"), "/init");
  if (j.contains("init_b")) {
    c.init_b = parse_init(j["init_b"], "/init_b");
    c.has_init_b = true;
  }

  const bool needs_integrator = c.kind != "pde";
  if (needs_integrator) {
    const json& ji = member(j, "", "integrator");
    const std::string p = "/integrator";
    c.integrator.dt = num(member(ji, p, "dt"), p + "/dt");
    c.integrator.t_final = num(member(ji, p, "t_final"), p + "/t_final");
    c.integrator.n_particles = static_cast<std::size_t>(uint_field(ji, p, "n_particles"));
    c.integrator.seed = uint_field(ji, p, "seed");  // explicit seeds, no entropy defaults
    c.integrator.observe_every = num_or(ji, p, "observe_every", 0.1);
    c.integrator.snapshots = ji.contains("snapshots") && ji["snapshots"].get<bool>();
    if (!(c.integrator.dt > 0.0)) fail(p + "/dt", "must be positive");
    if (!(c.integrator.t_final >= 0.0)) fail(p + "/t_final", "must be nonnegative");
    if (c.integrator.n_particles == 0) fail(p + "/n_particles", "must be positive");
  }

  if (j.contains("metrics")) {
    const json& arr = j["metrics"];
    if (!arr.is_array()) fail("/metrics", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.metrics.push_back(parse_metric(arr[i], "/metrics/" + std::to_string(i)));
  }

  if (j.contains("rate_fit")) {
    const json& jr = j["rate_fit"];
    c.rate_fit.metric = str_or(jr, "/rate_fit", "metric", "");
    c.rate_fit.burn_in_fraction = num_or(jr, "/rate_fit", "burn_in_fraction", 0.1);
    c.rate_fit.noise_floor_multiplier = num_or(jr, "/rate_fit", "noise_floor_multiplier", 3.0);
  }

  if (j.contains("coupling")) {
    const json& jc = j["coupling"];
    const std::string mode = str_or(jc, "/coupling", "mode", "reflection");
    if (mode == "reflection")
      c.coupling.mode = CouplingMode::reflection;
    else if (mode == "synchronous")
      c.coupling.mode = CouplingMode::synchronous;
    else
      fail("/coupling/mode", "unknown coupling mode '" + mode + "'");
    c.coupling.meet_tolerance = num_or(jc, "/coupling", "meet_tolerance", 0.5);
    c.coupling.psi = str_or(jc, "/coupling", "psi", "saturating_exp");
  }

  if (j.contains("pde")) {
    const json& jp = j["pde"];
    c.pde.cells = static_cast<int>(uint_field(jp, "/pde", "cells"));
    c.pde.dt = num_or(jp, "/pde", "dt", 0.0);
    c.pde.t_final = num_or(jp, "/pde", "t_final", 1.0);
    c.pde.observe_every = num_or(jp, "/pde", "observe_every", 0.1);
    c.pde.diffusion = num_or(jp, "/pde", "diffusion", 1.0);
    c.pde.steady_tol = num_or(jp, "/pde", "steady_tol", 1e-4);
    c.pde.t_max = num_or(jp, "/pde", "t_max", 40.0);
  } else if (c.kind == "pde") {
    fail("/pde", "missing required field");
  }

  if (j.contains("fixed_point")) {
    const json& jf = j["fixed_point"];
    c.fixed_point.tol = num_or(jf, "/fixed_point", "tol", 1e-2);
    c.fixed_point.max_iters = static_cast<int>(
        jf.contains("max_iters") ? uint_field(jf, "/fixed_point", "max_iters") : 40);
    c.fixed_point.t_stat = num_or(jf, "/fixed_point", "t_stat", 10.0);
    if (jf.contains("n_particles"))
      c.fixed_point.n_particles = static_cast<std::size_t>(uint_field(jf, "/fixed_point", "n_particles"));
    c.fixed_point.dt = num_or(jf, "/fixed_point", "dt", 0.0);
  }

  c.output_dir = str_or(j, "", "output_dir", "out");
  if (c.kind == "pde" && c.domain.kind() != DomainKind::box)
    fail("/domain", "pde experiments need a 1D box domain");
  return c;
}

PsiProfile psi_by_name(const std::string& name) {
  if (name == "linear") return PsiProfile::linear();
  if (name == "saturating_exp") return PsiProfile::saturating_exp();
  throw ConfigError("/coupling/psi: unknown profile '" + name +
                    "' (available: linear, saturating_exp)");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace mvsde
