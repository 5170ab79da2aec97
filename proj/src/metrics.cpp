#include "mvsde/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mvsde/assignment.hpp"

namespace mvsde {

EmpiricalMeasure EmpiricalMeasure::from_points(int dim, Vec points, Vec weights) {
  if (dim < 1) throw InvalidArgument("EmpiricalMeasure: dim must be positive");
  if (points.empty() || points.size() % static_cast<std::size_t>(dim) != 0)
    throw InvalidArgument("EmpiricalMeasure: points size must be a positive multiple of dim");
  EmpiricalMeasure m;
  m.dim = dim;
  m.n = points.size() / static_cast<std::size_t>(dim);
  m.points = std::move(points);
  if (!weights.empty()) {
    if (weights.size() != m.n) throw InvalidArgument("EmpiricalMeasure: weights size mismatch");
    double s = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw InvalidArgument("EmpiricalMeasure: negative weight");
      s += w;
    }
    if (s <= 0.0) throw InvalidArgument("EmpiricalMeasure: weights sum to zero");
    for (double& w : weights) w /= s;
    m.weights = std::move(weights);
  }
  return m;
}

Vec EmpiricalMeasure::mean() const {
  Vec out(dim, 0.0);
  for (int k = 0; k < dim; ++k)
    out[k] = pairwise_sum(n, [&](std::size_t i) { return point(i)[k] * weight(i); });
  return out;
}

namespace {

struct SortedView {
  std::vector<double> x;  // sorted values (one coordinate)
  std::vector<double> w;  // matching weights
};

SortedView sorted_1d(const EmpiricalMeasure& m) {
  std::vector<std::size_t> idx(m.n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return m.points[a] < m.points[b]; });
  SortedView v;
  v.x.resize(m.n);
  v.w.resize(m.n);
  for (std::size_t k = 0; k < m.n; ++k) {
    v.x[k] = m.points[idx[k]];
    v.w[k] = m.weight(idx[k]);
  }
  return v;
}

void require_1d(const EmpiricalMeasure& m, const char* who) {
  if (m.dim != 1) throw InvalidArgument(std::string(who) + ": one-dimensional measures only");
}

double quantile_sorted(const std::vector<double>& x, const std::vector<double>& w, double q) {
  double cum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cum += w[i];
    if (cum >= q - 1e-15) return x[i];
  }
  return x.back();
}

double pow_cost(double d, double p) {
  if (p == 1.0) return d;
  if (p == 2.0) return d * d;
  return std::pow(d, p);
}

}  // namespace

double wp_quantile_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  require_1d(mu, "wp_quantile_1d");
  require_1d(nu, "wp_quantile_1d");
  if (!(p >= 1.0)) throw InvalidArgument("wp_quantile_1d: p must be >= 1");
  const SortedView a = sorted_1d(mu), b = sorted_1d(nu);
  // Walk the merged quantile levels of both cumulative distributions; on each
  // level segment the optimal coupling pairs the current order statistics.
  double cost = 0.0, level = 0.0;
  double ca = a.w[0], cb = b.w[0];
  std::size_t i = 0, j = 0;
  while (true) {
    const double next = std::min(ca, cb);
    const double du = next - level;
    if (du > 0.0) cost += pow_cost(std::abs(a.x[i] - b.x[j]), p) * du;
    level = next;
    const bool adv_a = ca <= next + 1e-15;
    const bool adv_b = cb <= next + 1e-15;
    if (adv_a) {
      if (++i >= a.x.size()) break;
      ca += a.w[i];
    }
    if (adv_b) {
      if (++j >= b.x.size()) break;
      cb += b.w[j];
    }
  }
  return std::pow(cost, 1.0 / p);
}

double w1_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  return wp_quantile_1d(mu, nu, 1.0);
}

double wp_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  if (mu.dim != nu.dim) throw InvalidArgument("wp_exact: dimension mismatch");
  if (!(p >= 1.0)) throw InvalidArgument("wp_exact: p must be >= 1");
  if (!mu.uniform() || !nu.uniform())
    throw InvalidArgument("wp_exact: uniform weights required (use wp_quantile_1d or wp_sinkhorn)");
  if (mu.n != nu.n) throw InvalidArgument("wp_exact: equal sample sizes required");
  const std::size_t n = mu.n;
  if (mu.dim == 1) {
    // Monotone matching is optimal in 1D for the convex cost |x-y|^p.
    Vec a(mu.points), b(nu.points);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double cost = pairwise_sum(n, [&](std::size_t i) { return pow_cost(std::abs(a[i] - b[i]), p); });
    return std::pow(cost / static_cast<double>(n), 1.0 / p);
  }
  if (n > 2048)
    throw InvalidArgument("wp_exact: assignment route limited to n <= 2048; use wp_sinkhorn");
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cost[i * n + j] = pow_cost(dist2(mu.point(i), nu.point(j)), p);
  std::vector<int> match;
  const double total = solve_assignment(cost, static_cast<int>(n), match);
  return std::pow(total / static_cast<double>(n), 1.0 / p);
}

double w_psi(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
             const std::function<double(double)>& psi) {
  if (mu.dim != nu.dim) throw InvalidArgument("w_psi: dimension mismatch");
  if (!mu.uniform() || !nu.uniform() || mu.n != nu.n)
    throw InvalidArgument("w_psi: uniformly weighted measures of equal size required");
  if (mu.n > 2048) throw InvalidArgument("w_psi: n <= 2048 required");
  const std::size_t n = mu.n;
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cost[i * n + j] = psi(dist2(mu.point(i), nu.point(j)));
  std::vector<int> match;
  return solve_assignment(cost, static_cast<int>(n), match) / static_cast<double>(n);
}

namespace {

// Regularised transport value (cost plus entropy penalty) by log-domain
// Sinkhorn iterations with stepwise regularisation scaling.
struct RegOt {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

RegOt reg_ot(const std::vector<double>& cost, const Vec& a, const Vec& b, double reg, int max_iters) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> f(n, 0.0), g(m, 0.0), la(n), lb(m);
  for (std::size_t i = 0; i < n; ++i) la[i] = std::log(a[i]);
  for (std::size_t j = 0; j < m; ++j) lb[j] = std::log(b[j]);
  double cmax = 0.0;
  for (double c : cost) cmax = std::max(cmax, c);
  double eps = std::max(reg, cmax > 0.0 ? cmax / 2.0 : reg);
  int used = 0;
  bool converged = false;
  auto update = [&](double e) {
    // f_i = -e log sum_j b_j exp((g_j - C_ij)/e), then symmetrically for g.
    for (std::size_t i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j)
        best = std::max(best, (g[j] - cost[i * m + j]) / e + lb[j]);
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        s += std::exp((g[j] - cost[i * m + j]) / e + lb[j] - best);
      f[i] = -e * (best + std::log(s));
    }
    for (std::size_t j = 0; j < m; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i)
        best = std::max(best, (f[i] - cost[i * m + j]) / e + la[i]);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += std::exp((f[i] - cost[i * m + j]) / e + la[i] - best);
      g[j] = -e * (best + std::log(s));
    }
  };
  auto row_violation = [&](double e) {
    // After a g-update columns are exact; the row marginal error measures
    // convergence of the plan pi_ij = exp((f+g-C)/e + la + lb).
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double ri = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        ri += std::exp((f[i] + g[j] - cost[i * m + j]) / e + la[i] + lb[j]);
      err += std::abs(ri - a[i]);
    }
    return err;
  };
  while (eps > reg * 1.0000001 && used < max_iters) {
    for (int it = 0; it < 8 && used < max_iters; ++it, ++used) update(eps);
    eps = std::max(reg, eps / 2.0);
  }
  while (used < max_iters) {
    update(reg);
    ++used;
    if (used % 4 == 0 && row_violation(reg) < 1e-10) {
      converged = true;
      break;
    }
  }
  if (!converged) converged = row_violation(reg) < 1e-6;
  // Primal value of the converged plan: transport cost + reg * KL(pi | a x b).
  double cost_term = 0.0, kl = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double lp = (f[i] + g[j] - cost[i * m + j]) / reg + la[i] + lb[j];
      const double pij = std::exp(lp);
      if (pij > 0.0) {
        cost_term += pij * cost[i * m + j];
        kl += pij * (lp - la[i] - lb[j]) - pij;
      }
    }
  kl += 1.0;  // sum pi ~ 1 at convergence
  RegOt r;
  r.value = cost_term + reg * kl;
  r.converged = converged;
  r.iterations = used;
  return r;
}

std::vector<double> cost_matrix(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  std::vector<double> c(mu.n * nu.n);
  for (std::size_t i = 0; i < mu.n; ++i)
    for (std::size_t j = 0; j < nu.n; ++j)
      c[i * nu.n + j] = pow_cost(dist2(mu.point(i), nu.point(j)), p);
  return c;
}

Vec weights_of(const EmpiricalMeasure& m) {
  if (!m.uniform()) return m.weights;
  return Vec(m.n, 1.0 / static_cast<double>(m.n));
}

}  // namespace

SinkhornResult wp_sinkhorn(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                           double reg, int max_iters) {
  if (mu.dim != nu.dim) throw InvalidArgument("wp_sinkhorn: dimension mismatch");
  if (!(p >= 1.0)) throw InvalidArgument("wp_sinkhorn: p must be >= 1");
  const auto cab = cost_matrix(mu, nu, p);
  if (reg <= 0.0) {
    // Default scale: 5% of the median pairwise cost.
    std::vector<double> d(cab);
    auto mid = d.begin() + d.size() / 2;
    std::nth_element(d.begin(), mid, d.end());
    reg = 0.05 * std::max(*mid, 1e-300);
  }
  const Vec a = weights_of(mu), b = weights_of(nu);
  const RegOt ab = reg_ot(cab, a, b, reg, max_iters);
  const RegOt aa = reg_ot(cost_matrix(mu, mu, p), a, a, reg, max_iters);
  const RegOt bb = reg_ot(cost_matrix(nu, nu, p), b, b, reg, max_iters);
  SinkhornResult r;
  r.reg = reg;
  r.iterations = ab.iterations + aa.iterations + bb.iterations;
  r.converged = ab.converged && aa.converged && bb.converged;
  const double s = ab.value - 0.5 * (aa.value + bb.value);
  r.value = std::pow(std::max(s, 0.0), 1.0 / p);
  return r;
}

namespace {

struct Axis {
  double min = 0.0, width = 1.0;
  int bins = 1;
};

// Center-aligned binning: extreme data values sit at the centers of the first
// and last cells, so point masses are evaluated at their own locations.
Axis make_axis(std::vector<double> vals, std::vector<double> ws, int fixed_bins, int max_bins) {
  Axis ax;
  const auto [mn_it, mx_it] = std::minmax_element(vals.begin(), vals.end());
  const double mn = *mn_it, mx = *mx_it, range = mx - mn;
  if (range <= 0.0) {
    ax.min = mn;
    ax.bins = 1;
    ax.width = 1.0;
    return ax;
  }
  int bins = fixed_bins;
  if (bins <= 0) {
    std::vector<std::size_t> idx(vals.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<double> sx(vals.size()), sw(vals.size());
    double tot = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      sx[k] = vals[idx[k]];
      sw[k] = ws[idx[k]];
      tot += ws[idx[k]];
    }
    for (double& w : sw) w /= tot;
    const double iqr = quantile_sorted(sx, sw, 0.75) - quantile_sorted(sx, sw, 0.25);
    const double fd = 2.0 * iqr / std::cbrt(static_cast<double>(vals.size()));
    bins = fd > 0.0 ? static_cast<int>(std::lround(range / fd)) + 1 : 2;
  }
  ax.bins = std::clamp(bins, 2, max_bins);
  ax.min = mn;
  ax.width = range / static_cast<double>(ax.bins - 1);
  return ax;
}

int cell_of(double v, const Axis& ax) {
  if (ax.bins == 1) return 0;
  const int c = static_cast<int>(std::floor((v - ax.min) / ax.width + 0.5));
  return std::clamp(c, 0, ax.bins - 1);
}

}  // namespace

HistogramPair make_histogram_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                  const BinningRule& rule) {
  if (mu.dim != nu.dim) throw InvalidArgument("make_histogram_pair: dimension mismatch");
  if (mu.dim > 2) throw InvalidArgument("make_histogram_pair: histograms support dimensions 1 and 2");
  const int d = mu.dim;
  std::vector<Axis> axes(d);
  for (int k = 0; k < d; ++k) {
    std::vector<double> vals, ws;
    vals.reserve(mu.n + nu.n);
    ws.reserve(mu.n + nu.n);
    for (std::size_t i = 0; i < mu.n; ++i) {
      vals.push_back(mu.point(i)[k]);
      ws.push_back(mu.weight(i));
    }
    for (std::size_t i = 0; i < nu.n; ++i) {
      vals.push_back(nu.point(i)[k]);
      ws.push_back(nu.weight(i));
    }
    axes[k] = make_axis(std::move(vals), std::move(ws), rule.fixed_bins, rule.max_bins);
  }
  HistogramPair h;
  h.dim = d;
  std::size_t cells = 1;
  for (int k = 0; k < d; ++k) {
    h.bins.push_back(axes[k].bins);
    cells *= static_cast<std::size_t>(axes[k].bins);
  }
  h.p.assign(cells, 0.0);
  h.q.assign(cells, 0.0);
  h.centers.resize(cells * d);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t rest = c;
    for (int k = 0; k < d; ++k) {
      const std::size_t ik = rest % axes[k].bins;
      rest /= axes[k].bins;
      h.centers[c * d + k] = axes[k].min + static_cast<double>(ik) * (axes[k].bins == 1 ? 0.0 : axes[k].width);
    }
  }
  auto deposit = [&](const EmpiricalMeasure& m, Vec& target) {
    for (std::size_t i = 0; i < m.n; ++i) {
      std::size_t c = 0, strideAcc = 1;
      for (int k = 0; k < d; ++k) {
        c += static_cast<std::size_t>(cell_of(m.point(i)[k], axes[k])) * strideAcc;
        strideAcc *= axes[k].bins;
      }
      target[c] += m.weight(i);
    }
  };
  deposit(mu, h.p);
  deposit(nu, h.q);
  return h;
}

Vec histogram_1d(const EmpiricalMeasure& mu, const Vec& edges) {
  require_1d(mu, "histogram_1d");
  if (edges.size() < 2) throw InvalidArgument("histogram_1d: need at least two edges");
  const std::size_t bins = edges.size() - 1;
  Vec out(bins, 0.0);
  for (std::size_t i = 0; i < mu.n; ++i) {
    const double x = mu.points[i];
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    std::size_t b = it == edges.begin() ? 0 : static_cast<std::size_t>(it - edges.begin() - 1);
    if (b >= bins) b = bins - 1;
    out[b] += mu.weight(i);
  }
  return out;
}

double weighted_variation(const HistogramPair& h,
                          const std::function<double(std::span<const double>)>& V) {
  double s = 0.0;
  for (std::size_t c = 0; c < h.cells(); ++c) s += std::abs(h.p[c] - h.q[c]) * V(h.center(c));
  return s;
}

double weighted_variation(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                          const std::function<double(std::span<const double>)>& V,
                          const BinningRule& rule) {
  return weighted_variation(make_histogram_pair(mu, nu, rule), V);
}

double relative_entropy(const HistogramPair& h, double pseudo_count) {
  const double a = std::max(pseudo_count, 0.0);
  const double cells = static_cast<double>(h.cells());
  double ent = 0.0;
  for (std::size_t c = 0; c < h.cells(); ++c) {
    const double p = (h.p[c] + a) / (1.0 + cells * a);
    const double q = (h.q[c] + a) / (1.0 + cells * a);
    if (p > 0.0) {
      if (q <= 0.0) return std::numeric_limits<double>::infinity();
      ent += p * std::log(p / q);
    }
  }
  return std::max(ent, 0.0);
}

double relative_entropy(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                        const BinningRule& rule, double pseudo_count) {
  if (pseudo_count < 0.0) pseudo_count = 0.5 / static_cast<double>(std::min(mu.n, nu.n));
  return relative_entropy(make_histogram_pair(mu, nu, rule), pseudo_count);
}

}  // namespace mvsde
