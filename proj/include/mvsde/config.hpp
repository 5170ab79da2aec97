#pragma once

// JSON experiment configuration: one document describing domain, model,
// initial laws, integrator, metrics, and solver settings.  Seeds are
// mandatory — there are no entropy defaults anywhere.  Validation errors
// carry the JSON path of the offending field.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mvsde/geometry.hpp"
#include "mvsde/model.hpp"
#include "mvsde/particle.hpp"

namespace mvsde {

struct ConfigError : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

struct IntegratorConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  std::size_t n_particles = 1000;
  std::uint64_t seed = 0;
  double observe_every = 0.1;
  bool snapshots = false;
};

struct MetricConfig {
  std::string name;  // w1 | w2 | wp | wpsi | tv | entropy
  double p = 2.0;    // for wp
  std::string psi = "linear";
  // Reference law: a Gaussian sample (diagonal covariance) with its own seed.
  Vec ref_mean, ref_stddev;
  std::size_t n_reference = 0;  // 0: match the particle count
  std::uint64_t ref_seed = 0;
  double tolerance = 0.0;  // declared comparison tolerance; 0 = none declared
};

struct RateFitConfig {
  std::string metric;  // empty: first configured metric
  double burn_in_fraction = 0.1;
  double noise_floor_multiplier = 3.0;
};

struct CouplingConfig {
  CouplingMode mode = CouplingMode::reflection;
  double meet_tolerance = 0.5;
  std::string psi = "saturating_exp";
};

struct PdeSettings {
  int cells = 800;
  double dt = 0.0;  // 0: derived from the CFL bound
  double t_final = 1.0;
  double observe_every = 0.1;
  double diffusion = 1.0;
  double steady_tol = 1e-4;
  double t_max = 40.0;
};

struct FixedPointSettings {
  double tol = 1e-2;
  int max_iters = 40;
  double t_stat = 10.0;
  std::size_t n_particles = 0;  // 0: integrator value
  double dt = 0.0;              // 0: integrator value
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string kind = "simulate";  // simulate | couple | pde | fixed_point
  DomainGeometry domain = DomainGeometry::full_space(1);
  ModelSpec model;
  InitSpec init_a, init_b;
  bool has_init_b = false;
  IntegratorConfig integrator;
  std::vector<MetricConfig> metrics;
  RateFitConfig rate_fit;
  CouplingConfig coupling;
  PdeSettings pde;
  FixedPointSettings fixed_point;
  std::string output_dir = "out";
  nlohmann::json raw;  // original document, embedded in the manifest
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

// Named concave distance profiles: "linear" or "saturating_exp".
PsiProfile psi_by_name(const std::string& name);

}  // namespace mvsde
