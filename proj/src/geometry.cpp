#include "mvsde/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace mvsde {

namespace {
void check_dim(int dim, std::size_t got, const char* who) {
  if (static_cast<std::size_t>(dim) != got)
    throw InvalidArgument(std::string(who) + ": point has wrong dimension");
}
}  // namespace

DomainGeometry DomainGeometry::full_space(int dim) {
  if (dim < 1) throw InvalidArgument("full_space: dim must be positive");
  DomainGeometry d;
  d.kind_ = DomainKind::full_space;
  d.dim_ = dim;
  d.scale_ = 1.0;
  d.tol_ = 1e-9;
  return d;
}

DomainGeometry DomainGeometry::half_space(Vec a, double c) {
  const double na = norm2(a);
  if (a.empty() || na == 0.0) throw InvalidArgument("half_space: normal must be nonzero");
  DomainGeometry d;
  d.kind_ = DomainKind::half_space;
  d.dim_ = static_cast<int>(a.size());
  d.a_ = std::move(a);
  d.c_ = c;
  d.scale_ = std::max(1.0, std::abs(c) / na);
  d.tol_ = 1e-9 * d.scale_;
  return d;
}

DomainGeometry DomainGeometry::ball(Vec center, double radius) {
  if (center.empty() || !(radius > 0.0)) throw InvalidArgument("ball: need dim >= 1 and radius > 0");
  DomainGeometry d;
  d.kind_ = DomainKind::ball;
  d.dim_ = static_cast<int>(center.size());
  d.center_ = std::move(center);
  d.radius_ = radius;
  d.scale_ = 2.0 * radius;
  d.tol_ = 1e-9 * d.scale_;
  return d;
}

DomainGeometry DomainGeometry::box(Vec lo, Vec hi) {
  if (lo.empty() || lo.size() != hi.size()) throw InvalidArgument("box: bounds mismatch");
  double diam2 = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) throw InvalidArgument("box: need lo < hi in every coordinate");
    diam2 += (hi[i] - lo[i]) * (hi[i] - lo[i]);
  }
  DomainGeometry d;
  d.kind_ = DomainKind::box;
  d.dim_ = static_cast<int>(lo.size());
  d.lo_ = std::move(lo);
  d.hi_ = std::move(hi);
  d.scale_ = std::sqrt(diam2);
  d.tol_ = 1e-9 * d.scale_;
  return d;
}

DomainGeometry DomainGeometry::polytope(std::vector<Vec> rows, Vec rhs) {
  if (rows.empty() || rows.size() != rhs.size()) throw InvalidArgument("polytope: rows/rhs mismatch");
  DomainGeometry d;
  d.kind_ = DomainKind::polytope;
  d.dim_ = static_cast<int>(rows[0].size());
  d.row_norm_.resize(rows.size());
  double sc = 1.0;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != static_cast<std::size_t>(d.dim_))
      throw InvalidArgument("polytope: inconsistent row dimension");
    d.row_norm_[j] = norm2(rows[j]);
    if (d.row_norm_[j] == 0.0) throw InvalidArgument("polytope: zero facet row");
    sc = std::max(sc, std::abs(rhs[j]) / d.row_norm_[j]);
  }
  d.rows_ = std::move(rows);
  d.rhs_ = std::move(rhs);
  d.scale_ = sc;
  d.tol_ = 1e-9 * sc;
  return d;
}

bool DomainGeometry::contains(std::span<const double> x) const {
  check_dim(dim_, x.size(), "contains");
  switch (kind_) {
    case DomainKind::full_space:
      return true;
    case DomainKind::half_space:
      return dot(a_, x) <= c_ + tol_ * norm2(a_);
    case DomainKind::ball:
      return dist2(x, center_) <= radius_ + tol_;
    case DomainKind::box:
      for (int i = 0; i < dim_; ++i)
        if (x[i] < lo_[i] - tol_ || x[i] > hi_[i] + tol_) return false;
      return true;
    case DomainKind::polytope:
      for (std::size_t j = 0; j < rows_.size(); ++j)
        if (dot(rows_[j], x) > rhs_[j] + tol_ * row_norm_[j]) return false;
      return true;
  }
  return false;
}

Projection DomainGeometry::project(std::span<const double> x) const {
  check_dim(dim_, x.size(), "project");
  Projection p;
  p.point.assign(x.begin(), x.end());
  p.distance = project_into(p.point);
  return p;
}

double DomainGeometry::project_into(std::span<double> y) const {
  switch (kind_) {
    case DomainKind::full_space:
      return 0.0;
    case DomainKind::half_space: {
      const double g = dot(a_, y) - c_;
      if (g <= 0.0) return 0.0;
      const double na2 = dot(a_, a_);
      for (int i = 0; i < dim_; ++i) y[i] -= g / na2 * a_[i];
      return g / std::sqrt(na2);
    }
    case DomainKind::ball: {
      const double r = dist2(y, center_);
      if (r <= radius_) return 0.0;
      for (int i = 0; i < dim_; ++i) y[i] = center_[i] + radius_ / r * (y[i] - center_[i]);
      return r - radius_;
    }
    case DomainKind::box: {
      double d2 = 0.0;
      for (int i = 0; i < dim_; ++i) {
        const double c = std::clamp(y[i], lo_[i], hi_[i]);
        d2 += (y[i] - c) * (y[i] - c);
        y[i] = c;
      }
      return std::sqrt(d2);
    }
    case DomainKind::polytope: {
      // Dykstra's alternating projections onto the facet half spaces.
      // Increments keep the limit at the true metric projection rather than
      // just a feasible point.
      const Vec start(y.begin(), y.end());
      std::vector<Vec> inc(rows_.size(), Vec(dim_, 0.0));
      const double stop = 1e-13 * std::max(scale_, norm2(start));
      Vec z(dim_);
      for (int sweep = 0; sweep < 10000; ++sweep) {
        double moved = 0.0;
        for (std::size_t j = 0; j < rows_.size(); ++j) {
          for (int i = 0; i < dim_; ++i) z[i] = y[i] + inc[j][i];
          const double g = dot(rows_[j], z) - rhs_[j];
          const double s = g > 0.0 ? g / (row_norm_[j] * row_norm_[j]) : 0.0;
          for (int i = 0; i < dim_; ++i) {
            const double yi = z[i] - s * rows_[j][i];
            inc[j][i] = z[i] - yi;
            moved += std::abs(yi - y[i]);
            y[i] = yi;
          }
        }
        if (moved <= stop) break;
      }
      return dist2(start, y);
    }
  }
  throw RuntimeFailure("project: unreachable");
}

Vec DomainGeometry::inward_normal(std::span<const double> x) const {
  check_dim(dim_, x.size(), "inward_normal");
  switch (kind_) {
    case DomainKind::full_space:
      throw InvalidArgument("inward_normal: full space has no boundary");
    case DomainKind::half_space: {
      Vec n(dim_);
      const double na = norm2(a_);
      for (int i = 0; i < dim_; ++i) n[i] = -a_[i] / na;
      return n;
    }
    case DomainKind::ball: {
      const double r = dist2(x, center_);
      if (std::abs(r - radius_) > tol_ + 1e-12 * radius_)
        throw InvalidArgument("inward_normal: point is not on the sphere");
      Vec n(dim_);
      for (int i = 0; i < dim_; ++i) n[i] = (center_[i] - x[i]) / r;
      return n;
    }
    case DomainKind::box: {
      Vec n(dim_, 0.0);
      int active = 0;
      for (int i = 0; i < dim_; ++i) {
        if (x[i] <= lo_[i] + tol_) {
          n[i] += 1.0;
          ++active;
        }
        if (x[i] >= hi_[i] - tol_) {
          n[i] -= 1.0;
          ++active;
        }
      }
      if (active == 0) throw InvalidArgument("inward_normal: point is not on the boundary");
      const double nn = norm2(n);
      if (nn == 0.0) throw RuntimeFailure("inward_normal: degenerate corner normal");
      for (double& v : n) v /= nn;
      return n;
    }
    case DomainKind::polytope: {
      Vec n(dim_, 0.0);
      int active = 0;
      for (std::size_t j = 0; j < rows_.size(); ++j) {
        if (dot(rows_[j], x) >= rhs_[j] - tol_ * row_norm_[j]) {
          for (int i = 0; i < dim_; ++i) n[i] -= rows_[j][i] / row_norm_[j];
          ++active;
        }
      }
      if (active == 0) throw InvalidArgument("inward_normal: point is not on the boundary");
      const double nn = norm2(n);
      if (nn == 0.0) throw RuntimeFailure("inward_normal: degenerate corner normal");
      for (double& v : n) v /= nn;
      return n;
    }
  }
  throw RuntimeFailure("inward_normal: unreachable");
}

ReflectStep DomainGeometry::reflect_step(std::span<const double> x, std::span<const double> delta) const {
  check_dim(dim_, x.size(), "reflect_step");
  check_dim(dim_, delta.size(), "reflect_step");
  if (!contains(x)) throw InvalidArgument("reflect_step: start point lies outside the domain");
  Vec y(dim_);
  for (int i = 0; i < dim_; ++i) y[i] = x[i] + delta[i];
  const double dl = project_into(y);
  return ReflectStep{std::move(y), dl};
}

const Vec& DomainGeometry::box_lo() const {
  if (kind_ != DomainKind::box) throw InvalidArgument("box_lo: domain is not a box");
  return lo_;
}

const Vec& DomainGeometry::box_hi() const {
  if (kind_ != DomainKind::box) throw InvalidArgument("box_hi: domain is not a box");
  return hi_;
}

}  // namespace mvsde
