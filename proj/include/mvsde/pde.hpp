#pragma once

// 1D finite-volume solver for the density evolution
//   d rho/dt = D rho'' - d/dx ( rho * (b + W*rho) )
// on an interval with no-flux boundaries: an independent density oracle for
// particle runs.  Conservative flux form (mass exact to roundoff), central
// diffusion, advection upwinded by the face velocity sign, explicit time
// stepping under a CFL guard.

#include <cstdint>
#include <functional>

#include "mvsde/common.hpp"
#include "mvsde/metrics.hpp"
#include "mvsde/model.hpp"
#include "mvsde/particle.hpp"

namespace mvsde {

struct DensityGrid {
  double a = 0.0, b = 1.0;  // interval
  int m = 0;                // cells
  Vec rho;                  // cell averages, size m, nonnegative, mass 1
  double time = 0.0;

  double h() const { return (b - a) / m; }
  double center(int i) const { return a + (i + 0.5) * h(); }
  double mass() const;
};

DensityGrid make_uniform_grid(double a, double b, int m);
// Cell averages from midpoint values of f >= 0, normalized to unit mass.
DensityGrid make_grid_from(double a, double b, int m,
                           const std::function<double(double)>& f);

struct PdeOptions {
  double diffusion = 1.0;   // D; pairs with sigma = sqrt(2) in the particle model
  double cfl_safety = 0.4;  // dt <= cfl_safety * min(h^2/(2D), h/max|velocity|)
  int workers = 1;
};

// One explicit conservative step; throws with a suggested dt when the CFL
// bound is violated.  The model must be one-dimensional; its measure argument
// is the grid density itself (midpoint quadrature at faces; linear kernels
// reduce to the density mean).
void gm_step(DensityGrid& g, const ModelSpec& model, double dt, const PdeOptions& opt = {});

// Step size safely below the CFL bound for the whole run: the interaction
// part of the velocity is replaced by a worst-case envelope so the suggestion
// stays valid as the density moves.
double suggest_dt(const DensityGrid& g, const ModelSpec& model, const PdeOptions& opt = {});

// Marches to t_final with a uniform step near dt (rounded so the horizon is
// hit exactly).
void advance(DensityGrid& g, const ModelSpec& model, double dt, double t_final,
             const PdeOptions& opt = {});

struct SteadyStateResult {
  DensityGrid grid;
  bool converged = false;
  double residual = 0.0;  // last L1 change over one unit of time
  double time = 0.0;
};

// Time-march until the L1 distance between densities one time unit apart
// drops below tol; reports non-convergence when t_max is hit first.
SteadyStateResult steady_state(DensityGrid g, const ModelSpec& model, double dt, double tol,
                               double t_max, const PdeOptions& opt = {});

// L1 distance between two densities on identical grids.
double l1_distance(const DensityGrid& x, const DensityGrid& y);

// Halves the resolution by averaging adjacent cell pairs (m must be even).
DensityGrid coarsen(const DensityGrid& g);

struct DensityComparison {
  double l1 = 0.0;              // sum_i |rho_i - p_i/h| * h, in [0, 2]
  double variation_norm = 0.0;  // l1 / 2 (the total-variation normalization)
  std::size_t outside = 0;      // samples clipped into the end cells
};

// Bins the sample onto the grid cells and compares in L1; both the L1 value
// and its half (variation norm) are reported to keep the factor-2 convention
// explicit.  Samples outside the interval are clipped and counted, with a
// warning above 0.1% leakage.
DensityComparison l1_against_measure(const DensityGrid& g, const EmpiricalMeasure& mu);
DensityComparison l1_against_particles(const DensityGrid& g, const Ensemble& e);

// Inverse-CDF sample of the piecewise-constant grid density (uniform within
// cells), on the dedicated reference rng stream.
EmpiricalMeasure sample_from_grid(const DensityGrid& g, std::size_t n, std::uint64_t seed);

}  // namespace mvsde
