#include "mvsde/checks.hpp"

#include <cmath>
#include <limits>

namespace mvsde {

namespace {
constexpr std::size_t kMaxViolationsKept = 32;

void record(CheckReport& rep, const Vec& x, double lhs, double rhs) {
  ++rep.checked;
  const double slack = rhs - lhs;
  if (rep.checked == 1 || slack < rep.min_slack) rep.min_slack = slack;
  if (lhs > rhs) {
    rep.pass = false;
    if (rep.violations.size() < kMaxViolationsKept) rep.violations.push_back({x, lhs, rhs});
  }
}

Vec eval_b1(const ModelSpec& model, const Vec& x) {
  Vec out(model.dim, 0.0);
  if (model.b1) model.b1(x, out);
  return out;
}

double frobenius(const Vec& m) {
  double s = 0.0;
  for (double v : m) s += v * v;
  return std::sqrt(s);
}
}  // namespace

CheckReport check_b1_growth(const ModelSpec& model, const std::function<double(double)>& phi,
                            double c1, double c2, const std::vector<Vec>& grid) {
  if (!phi) throw InvalidArgument("check_b1_growth: phi required");
  CheckReport rep;
  for (const Vec& x : grid) {
    const Vec b = eval_b1(model, x);
    const double r2 = dot(x, x);
    record(rep, x, dot(b, x), c1 - c2 * phi(r2));
    record(rep, x, norm2(b), c1 * phi(r2));
  }
  return rep;
}

CheckReport check_lyapunov(const ModelSpec& model, const LyapunovSpec& lyap,
                           const std::vector<Vec>& grid) {
  if (!lyap.V || !lyap.grad || !lyap.hess || !lyap.Phi)
    throw InvalidArgument("check_lyapunov: V, grad, hess and Phi are all required");
  if (!(lyap.eps > 0.0)) throw InvalidArgument("check_lyapunov: eps must be positive");
  const int d = model.dim;
  CheckReport rep;
  Vec g(d), h(static_cast<std::size_t>(d) * d);
  for (const Vec& x : grid) {
    const Vec b = eval_b1(model, x);
    lyap.grad(x, g);
    const double inner = dot(b, g);
    // sup over the eps-ball of |grad V| + |hess V|, taken on the stencil
    // {x, x +- eps e_i} and padded by 1.1 to cover the interior.
    double ball_sup = 0.0;
    Vec probe(x);
    auto probe_val = [&](const Vec& pt) {
      lyap.grad(pt, g);
      lyap.hess(pt, h);
      return norm2(g) + frobenius(h);
    };
    ball_sup = probe_val(x);
    for (int i = 0; i < d; ++i) {
      probe = x;
      probe[i] = x[i] + lyap.eps;
      ball_sup = std::max(ball_sup, probe_val(probe));
      probe[i] = x[i] - lyap.eps;
      ball_sup = std::max(ball_sup, probe_val(probe));
    }
    ball_sup *= 1.1;
    const double lhs = inner + lyap.eps * norm2(b) * ball_sup;
    const double rhs = lyap.K - lyap.eps * lyap.Phi(lyap.V(x));
    record(rep, x, lhs, rhs);
  }
  return rep;
}

CheckReport check_dissipativity(const ModelSpec& model, double K1, double K2,
                                const std::vector<DissipativityPair>& pairs) {
  CheckReport rep;
  for (const auto& pr : pairs) {
    const Vec bx = drift(model, pr.x, pr.mu);
    const Vec by = drift(model, pr.y, pr.nu);
    Vec diff(model.dim);
    double r2 = 0.0, inner = 0.0;
    for (int k = 0; k < model.dim; ++k) {
      diff[k] = pr.x[k] - pr.y[k];
      r2 += diff[k] * diff[k];
      inner += (bx[k] - by[k]) * diff[k];
    }
    const Vec sx = sigma_matrix(model, pr.x), sy = sigma_matrix(model, pr.y);
    double fro2 = 0.0;
    for (std::size_t k = 0; k < sx.size(); ++k) fro2 += (sx[k] - sy[k]) * (sx[k] - sy[k]);
    const double w2 = (pr.mu.n > 0 && pr.nu.n > 0) ? wp_exact(pr.mu, pr.nu, 2.0) : 0.0;
    record(rep, pr.x, 2.0 * inner + fro2, K1 * r2 + K2 * w2 * w2);
  }
  return rep;
}

CheckReport check_psi_class(const PsiProfile& profile, double r_max, int grid_points, double tol) {
  if (!profile.psi || !profile.dpsi || !profile.d2psi)
    throw InvalidArgument("check_psi_class: psi, dpsi, d2psi required");
  if (!(r_max > 0.0) || grid_points < 2) throw InvalidArgument("check_psi_class: bad grid");
  CheckReport rep;
  record(rep, {0.0}, std::abs(profile.psi(0.0)), tol);
  for (int j = 1; j <= grid_points; ++j) {
    const double r = r_max * static_cast<double>(j) / static_cast<double>(grid_points);
    const double ps = profile.psi(r), d1 = profile.dpsi(r), d2 = profile.d2psi(r);
    record(rep, {r}, 0.0, d1 - std::numeric_limits<double>::min());  // psi' > 0
    record(rep, {r}, d1, profile.sup_dpsi + tol);
    record(rep, {r}, r * d1 + r * r * std::max(d2, 0.0), profile.kappa * ps + tol);
  }
  return rep;
}

}  // namespace mvsde
