#pragma once

// Interacting particle systems with projection-based reflection at the domain
// boundary, plus coupled two-ensemble runs (synchronous or distance-reflecting
// noise).  All randomness is counter-based: a run is a pure function of
// (seed, model, domain, schedule), independent of the worker count.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mvsde/geometry.hpp"
#include "mvsde/metrics.hpp"
#include "mvsde/model.hpp"

namespace mvsde {

struct Ensemble {
  int dim = 1;
  std::size_t n = 0;
  Vec x;           // n * dim, row-major
  Vec local_time;  // accumulated boundary pushback per particle
  double time = 0.0;
  std::uint64_t step_index = 0;
  std::uint64_t seed = 0;
  std::uint32_t noise_stream = 0;  // rng stream for the driving noise
};

enum class InitKind { dirac, uniform_box, gaussian, points };

struct InitSpec {
  InitKind kind = InitKind::dirac;
  Vec point;        // dirac
  Vec lo, hi;       // uniform_box: sampled uniformly, kept inside the domain
  Vec mean, stddev; // gaussian (diagonal), projected onto the domain
  Vec points;       // explicit points, n * dim
};

// Samples n particles.  init_stream/noise_stream select the rng purposes so
// that paired ensembles draw from disjoint streams.
Ensemble init_ensemble(const DomainGeometry& domain, const InitSpec& init, std::size_t n,
                       std::uint64_t seed, std::uint32_t init_stream, std::uint32_t noise_stream);

// Gaussian reference sample on its own rng stream (diagonal covariance).
EmpiricalMeasure sample_gaussian_reference(int dim, const Vec& mean, const Vec& stddev,
                                           std::size_t n, std::uint64_t seed);

EmpiricalMeasure measure_of(const Ensemble& e);

// One explicit Euler step with projection at the boundary.  The empirical
// measure entering the drift is the pre-step one: interaction statistics are
// computed serially first, then particles move in parallel.
void step(Ensemble& e, const ModelSpec& model, const DomainGeometry& domain, double dt,
          int workers = 1);

struct Observation {
  double time = 0.0;
  std::vector<std::pair<std::string, double>> stats;
};

struct Trajectory {
  std::vector<Observation> rows;
  // Optional position snapshots (time, flattened positions).
  std::vector<std::pair<double, Vec>> snapshots;
};

using Observer = std::function<void(const Ensemble&, Observation&)>;

Observer moment_observer();      // mean_k and var_k per coordinate
Observer local_time_observer();  // mean accumulated local time

// Runs ceil(t_final/dt) steps, observing every observe_every time units
// (including t = 0 and the final time).
Trajectory simulate(Ensemble& e, const ModelSpec& model, const DomainGeometry& domain, double dt,
                    double t_final, double observe_every, const std::vector<Observer>& observers,
                    int workers = 1, bool keep_snapshots = false);

enum class CouplingMode { synchronous, reflection };

struct CoupledEnsemble {
  Ensemble x, y;
  std::vector<std::uint8_t> coupled;
  std::vector<double> meet_time;  // negative until the pair meets
  CouplingMode mode = CouplingMode::reflection;
  // Pairs are declared met when |x-y| <= meet_tolerance * sqrt(dt); from then
  // on the y particle mirrors the x particle exactly.
  double meet_tolerance = 0.5;
};

CoupledEnsemble make_coupled(Ensemble x, Ensemble y, CouplingMode mode, double meet_tolerance = 0.5);

// One coupled step.  The x side is advanced exactly as step() would with the
// same seed.  The y side consumes the same noise block: unchanged while
// synchronous, with the isotropic component reflected across the line between
// the pair while uncoupled in reflection mode (requires an isotropic sigma
// component), and identical to x after the pair has met.
void coupled_step(CoupledEnsemble& ce, const ModelSpec& model, const DomainGeometry& domain,
                  double dt, int workers = 1);

struct CouplingStats {
  double time = 0.0;
  double fraction_coupled = 0.0;
  double mean_distance = 0.0;
  double psi_moment = 0.0;  // mean psi(|x-y|) when a profile is supplied
};

CouplingStats coupling_statistics(const CoupledEnsemble& ce,
                                  const std::function<double(double)>& psi = {});

struct CoupledTrajectory {
  std::vector<CouplingStats> rows;
};

CoupledTrajectory coupled_simulate(CoupledEnsemble& ce, const ModelSpec& model,
                                   const DomainGeometry& domain, double dt, double t_final,
                                   double observe_every,
                                   const std::function<double(double)>& psi = {}, int workers = 1);

}  // namespace mvsde
