#pragma once

// Closed convex state domains and the projection-based reflection step used
// by the particle integrator.  A domain is one of: the whole space, a half
// space {x : <a,x> <= c}, a closed ball, an axis-aligned box, or a polytope
// {x : A x <= c} given by its facet rows.

#include <span>
#include <vector>

#include "mvsde/common.hpp"

namespace mvsde {

enum class DomainKind { full_space, half_space, ball, box, polytope };

struct Projection {
  Vec point;        // nearest point of the domain
  double distance;  // |x - point|
};

struct ReflectStep {
  Vec point;                    // projected end point, always inside the domain
  double local_time_increment;  // |proposal - point|, zero for interior moves
};

class DomainGeometry {
 public:
  static DomainGeometry full_space(int dim);
  // {x : <a,x> <= c}; the inward normal is -a/|a|.
  static DomainGeometry half_space(Vec a, double c);
  static DomainGeometry ball(Vec center, double radius);
  static DomainGeometry box(Vec lo, Vec hi);
  // {x : rows[j].x <= rhs[j] for all j}; rows need not be normalised.
  static DomainGeometry polytope(std::vector<Vec> rows, Vec rhs);

  int dim() const { return dim_; }
  DomainKind kind() const { return kind_; }

  // Boundary/membership tolerance: 1e-9 times a characteristic diameter
  // (at least 1 for unbounded domains).  Override for unusual scales.
  double tol() const { return tol_; }
  void set_tol(double t) { tol_ = t; }

  bool contains(std::span<const double> x) const;

  // Nearest point of the domain; the unique minimiser of |x-z| over z.
  // Polytopes use Dykstra's alternating projections over the facet half
  // spaces, iterated to 1e-13 relative accuracy.
  Projection project(std::span<const double> x) const;

  // In-place form used by the integrator's inner loop: replaces y by its
  // projection and returns the displaced distance.  Allocation-free except
  // for polytopes.
  double project_into(std::span<double> y) const;

  // Unit inward normal at a boundary point.  At corners (several active
  // facets) returns the normalised average of the active facet normals.
  // Throws if x is not within tol of the boundary.
  Vec inward_normal(std::span<const double> x) const;

  // One reflected move: propose x + delta, then pull back to the domain by
  // metric projection.  The local time increment is the pull-back distance.
  // Requires x inside the domain.
  ReflectStep reflect_step(std::span<const double> x, std::span<const double> delta) const;

  // Box bounds; throw for other domain kinds.
  const Vec& box_lo() const;
  const Vec& box_hi() const;

 private:
  DomainGeometry() = default;

  DomainKind kind_ = DomainKind::full_space;
  int dim_ = 0;
  double tol_ = 1e-9;
  double scale_ = 1.0;

  Vec a_;             // half_space row
  double c_ = 0.0;    // half_space rhs
  Vec center_;        // ball
  double radius_ = 0.0;
  Vec lo_, hi_;       // box
  std::vector<Vec> rows_;  // polytope rows
  Vec rhs_;                // polytope rhs
  Vec row_norm_;           // cached |rows_[j]|
};

}  // namespace mvsde
