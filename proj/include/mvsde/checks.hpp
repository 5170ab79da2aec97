#pragma once

// Verifiable sufficient conditions on a model: drift growth against a rate
// function, a Lyapunov drift inequality, two-sided dissipativity in state and
// measure, and membership of a modulus profile in the admissible class.
// Checkers return evidence (worst points and slacks), never just a boolean.

#include <vector>

#include "mvsde/metrics.hpp"
#include "mvsde/model.hpp"

namespace mvsde {

struct CheckViolation {
  Vec x;          // offending point (or pair midpoint context below)
  double lhs = 0.0, rhs = 0.0;
  double slack() const { return rhs - lhs; }
};

struct CheckReport {
  bool pass = true;
  std::size_t checked = 0;
  double min_slack = 0.0;  // most binding margin over all checked points
  std::vector<CheckViolation> violations;
};

// <b1(x), x> <= c1 - c2 * phi(|x|^2)  and  |b1(x)| <= c1 * phi(|x|^2)
// on the given grid.
CheckReport check_b1_growth(const ModelSpec& model, const std::function<double(double)>& phi,
                            double c1, double c2, const std::vector<Vec>& grid);

// The Lyapunov inequality of LyapunovSpec on the given grid.
CheckReport check_lyapunov(const ModelSpec& model, const LyapunovSpec& lyap,
                           const std::vector<Vec>& grid);

struct DissipativityPair {
  Vec x, y;
  EmpiricalMeasure mu, nu;
};

// 2 <b(x,mu) - b(y,nu), x - y> + |sigma(x) - sigma(y)|_F^2
//   <= K1 |x-y|^2 + K2 * W2(mu,nu)^2  on the given pairs.
CheckReport check_dissipativity(const ModelSpec& model, double K1, double K2,
                                const std::vector<DissipativityPair>& pairs);

// psi(0) = 0, psi' > 0, psi' <= sup_dpsi, and
// r psi'(r) + r^2 max(psi''(r), 0) <= kappa psi(r) on (0, r_max].
CheckReport check_psi_class(const PsiProfile& profile, double r_max, int grid_points = 1000,
                            double tol = 1e-10);

}  // namespace mvsde
