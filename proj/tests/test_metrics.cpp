#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "mvsde/metrics.hpp"
#include "mvsde/model.hpp"
#include "mvsde/particle.hpp"
#include "mvsde/rng.hpp"

using namespace mvsde;

namespace {

// Deterministic scratch-stream draws, one counter per instance.
struct Draws {
  std::uint64_t seed;
  std::uint64_t instance;
  std::uint64_t k = 0;
  double uniform() { return rng::uniform_at(seed, rng::kStreamScratch, instance, k++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

EmpiricalMeasure random_cloud(Draws& d, std::size_t n, int dim, double lo = -1.0, double hi = 1.0) {
  Vec pts(n * dim);
  for (double& v : pts) v = d.uniform(lo, hi);
  return EmpiricalMeasure::from_points(dim, std::move(pts));
}

// Minimum over all pairings of the mean matching cost, by enumeration.
double brute_force_wp(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  std::vector<std::size_t> perm(mu.n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < mu.n; ++i) {
      double d2 = 0.0;
      for (int k = 0; k < mu.dim; ++k) {
        const double diff = mu.point(i)[k] - nu.point(perm[i])[k];
        d2 += diff * diff;
      }
      cost += std::pow(std::sqrt(d2), p);
    }
    best = std::min(best, cost / static_cast<double>(mu.n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best, 1.0 / p);
}

double brute_force_wpsi(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                        const std::function<double(double)>& psi) {
  std::vector<std::size_t> perm(mu.n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < mu.n; ++i) {
      double d2 = 0.0;
      for (int k = 0; k < mu.dim; ++k) {
        const double diff = mu.point(i)[k] - nu.point(perm[i])[k];
        d2 += diff * diff;
      }
      cost += psi(std::sqrt(d2));
    }
    best = std::min(best, cost / static_cast<double>(mu.n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("assignment transport matches permutation enumeration") {
  for (std::uint64_t inst = 0; inst < 100; ++inst) {
    Draws d{101, inst};
    const std::size_t n = 1 + static_cast<std::size_t>(d.uniform() * 6.0) % 6;
    const int dim = 1 + static_cast<int>(d.uniform() * 3.0) % 3;
    const double p = (inst % 3 == 0) ? 1.0 : (inst % 3 == 1 ? 2.0 : 2.5);
    const EmpiricalMeasure mu = random_cloud(d, n, dim);
    const EmpiricalMeasure nu = random_cloud(d, n, dim);
    const double got = wp_exact(mu, nu, p);
    const double want = brute_force_wp(mu, nu, p);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("quantile couplings agree with the assignment solver in 1d") {
  for (std::uint64_t inst = 0; inst < 20; ++inst) {
    Draws d{102, inst};
    const EmpiricalMeasure mu = random_cloud(d, 64, 1, -3.0, 3.0);
    const EmpiricalMeasure nu = random_cloud(d, 64, 1, -2.0, 4.0);
    CHECK(w1_1d(mu, nu) == doctest::Approx(wp_exact(mu, nu, 1.0)).epsilon(1e-9));
    CHECK(wp_quantile_1d(mu, nu, 2.0) == doctest::Approx(wp_exact(mu, nu, 2.0)).epsilon(1e-9));
    CHECK(wp_quantile_1d(mu, nu, 1.0) == doctest::Approx(w1_1d(mu, nu)).epsilon(1e-12));
  }
}

TEST_CASE("weighted atoms behave like duplicated uniform atoms") {
  const EmpiricalMeasure weighted =
      EmpiricalMeasure::from_points(1, {0.0, 1.0, 3.0}, {0.25, 0.25, 0.5});
  const EmpiricalMeasure expanded = EmpiricalMeasure::from_points(1, {0.0, 1.0, 3.0, 3.0});
  Draws d{103, 0};
  const EmpiricalMeasure probe = random_cloud(d, 16, 1, -2.0, 5.0);
  CHECK(w1_1d(weighted, probe) == doctest::Approx(w1_1d(expanded, probe)).epsilon(1e-12));
  CHECK(wp_quantile_1d(weighted, probe, 2.0) ==
        doctest::Approx(wp_quantile_1d(expanded, probe, 2.0)).epsilon(1e-12));
  CHECK(w1_1d(weighted, weighted) == 0.0);
}

TEST_CASE("transport distances satisfy the triangle inequality and scaling") {
  for (std::uint64_t inst = 0; inst < 30; ++inst) {
    Draws d{104, inst};
    const EmpiricalMeasure a = random_cloud(d, 16, 2);
    const EmpiricalMeasure b = random_cloud(d, 16, 2);
    const EmpiricalMeasure c = random_cloud(d, 16, 2);
    CHECK(wp_exact(a, c, 2.0) <= wp_exact(a, b, 2.0) + wp_exact(b, c, 2.0) + 1e-12);
    CHECK(wp_exact(a, b, 2.0) == doctest::Approx(wp_exact(b, a, 2.0)).epsilon(1e-13));
    // scaling every point by 3 scales the distance by 3
    Vec pa = a.points, pb = b.points;
    for (double& v : pa) v *= 3.0;
    for (double& v : pb) v *= 3.0;
    const EmpiricalMeasure a3 = EmpiricalMeasure::from_points(2, std::move(pa));
    const EmpiricalMeasure b3 = EmpiricalMeasure::from_points(2, std::move(pb));
    CHECK(wp_exact(a3, b3, 2.0) == doctest::Approx(3.0 * wp_exact(a, b, 2.0)).epsilon(1e-12));
  }
}

TEST_CASE("concave-profile transport reduces to known cases") {
  const PsiProfile lin = PsiProfile::linear();
  const PsiProfile sat = PsiProfile::saturating_exp();
  for (std::uint64_t inst = 0; inst < 20; ++inst) {
    Draws d{105, inst};
    const EmpiricalMeasure mu = random_cloud(d, 24, 2);
    const EmpiricalMeasure nu = random_cloud(d, 24, 2);
    // psi(r) = r: the profile cost *is* the mean-cost W1
    CHECK(w_psi(mu, nu, lin.psi) == doctest::Approx(wp_exact(mu, nu, 1.0)).epsilon(1e-10));
    CHECK(w_psi(mu, mu, sat.psi) == 0.0);
    // 1 - e^{-r} <= min(r, 1) transfers to the optimal pairings
    CHECK(w_psi(mu, nu, sat.psi) <= std::min(wp_exact(mu, nu, 1.0), 1.0) + 1e-12);
  }
  // small instance against enumeration
  Draws d{105, 999};
  const EmpiricalMeasure mu = random_cloud(d, 6, 2);
  const EmpiricalMeasure nu = random_cloud(d, 6, 2);
  CHECK(w_psi(mu, nu, sat.psi) == doctest::Approx(brute_force_wpsi(mu, nu, sat.psi)).epsilon(1e-12));
}

TEST_CASE("entropic solver is debiased and close to the exact cost") {
  Draws d{106, 0};
  const EmpiricalMeasure mu = random_cloud(d, 64, 2);
  const EmpiricalMeasure nu = random_cloud(d, 64, 2, -0.5, 1.5);
  const SinkhornResult self = wp_sinkhorn(mu, mu, 2.0);
  CHECK(self.converged);
  CHECK(self.value <= 1e-6);
  const SinkhornResult cross = wp_sinkhorn(mu, nu, 2.0);
  CHECK(cross.converged);
  CHECK(cross.value > 0.0);
  const double exact = wp_exact(mu, nu, 2.0);
  CHECK(cross.value == doctest::Approx(exact).epsilon(0.10));
}

TEST_CASE("variation distance hits its extreme values") {
  Draws d{107, 0};
  const EmpiricalMeasure left = random_cloud(d, 200, 1, 0.0, 1.0);
  const EmpiricalMeasure right = random_cloud(d, 200, 1, 10.0, 11.0);
  const auto one = [](std::span<const double>) { return 1.0; };
  CHECK(weighted_variation(left, right, one) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(weighted_variation(left, left, one) == 0.0);
  for (std::uint64_t inst = 0; inst < 25; ++inst) {
    Draws di{107, inst + 1};
    const EmpiricalMeasure a = random_cloud(di, 100, 1, -2.0, 2.0);
    const EmpiricalMeasure b = random_cloud(di, 150, 1, -1.0, 3.0);
    const double tv = weighted_variation(a, b, one);
    CHECK(tv >= 0.0);
    CHECK(tv <= 2.0);
  }
  // the histogram-pair overload is the same computation
  const HistogramPair h = make_histogram_pair(left, right, BinningRule{32});
  CHECK(weighted_variation(h, one) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("half the variation distance is bounded by the entropy root") {
  for (std::uint64_t inst = 0; inst < 1000; ++inst) {
    Draws d{108, inst};
    const int m = 2 + static_cast<int>(d.uniform() * 15.0);
    HistogramPair h;
    h.dim = 1;
    h.bins = {m};
    h.centers.resize(m);
    h.p.resize(m);
    h.q.resize(m);
    double sp = 0.0, sq = 0.0;
    for (int c = 0; c < m; ++c) {
      h.centers[c] = c;
      h.p[c] = 0.01 + d.uniform();
      h.q[c] = 0.01 + d.uniform();
      sp += h.p[c];
      sq += h.q[c];
    }
    for (int c = 0; c < m; ++c) {
      h.p[c] /= sp;
      h.q[c] /= sq;
    }
    const auto one = [](std::span<const double>) { return 1.0; };
    const double tv_half = 0.5 * weighted_variation(h, one);
    const double kl = relative_entropy(h, 0.0);
    CHECK(kl >= 0.0);
    CHECK(tv_half <= std::sqrt(kl / 2.0) + 1e-12);
  }
}

TEST_CASE("gaussian location shift is recovered by transport distances") {
  const EmpiricalMeasure a = sample_gaussian_reference(1, {0.0}, {1.0}, 20000, 301);
  const EmpiricalMeasure b = sample_gaussian_reference(1, {1.5}, {1.0}, 20000, 302);
  CHECK(wp_quantile_1d(a, b, 2.0) == doctest::Approx(1.5).epsilon(0.03));
  CHECK(w1_1d(a, b) == doctest::Approx(1.5).epsilon(0.03));
  // scale change: W2(N(0,1), N(0,4))^2 = (2-1)^2 for matched quantiles
  const EmpiricalMeasure c = sample_gaussian_reference(1, {0.0}, {2.0}, 20000, 303);
  CHECK(wp_quantile_1d(a, c, 2.0) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("explicit-edge histograms clip outliers into the end bins") {
  const EmpiricalMeasure mu = EmpiricalMeasure::from_points(1, {-5.0, 0.5, 1.5, 7.0});
  const Vec mass = histogram_1d(mu, {0.0, 1.0, 2.0});
  REQUIRE(mass.size() == 2);
  CHECK(mass[0] == 0.5);
  CHECK(mass[1] == 0.5);
  Draws d{109, 0};
  const EmpiricalMeasure big = random_cloud(d, 500, 1, -3.0, 3.0);
  Vec edges(41);
  for (int i = 0; i <= 40; ++i) edges[i] = -2.0 + 4.0 * i / 40.0;
  const Vec m2 = histogram_1d(big, edges);
  CHECK(std::accumulate(m2.begin(), m2.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("relative entropy is zero on itself and finite under smoothing") {
  Draws d{110, 0};
  const EmpiricalMeasure mu = random_cloud(d, 400, 1, -1.0, 1.0);
  CHECK(relative_entropy(mu, mu) == 0.0);
  const EmpiricalMeasure nu = random_cloud(d, 400, 1, 5.0, 7.0);  // disjoint support
  const double kl = relative_entropy(mu, nu);
  CHECK(std::isfinite(kl));
  CHECK(kl > 0.0);
}

}  // TEST_SUITE
