#include "mvsde/common.hpp"

#include <cmath>
#include <cstdio>
#include <thread>

namespace mvsde {

double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {
constexpr std::size_t kLeaf = 64;

double pairwise_rec(const double* v, std::size_t n) {
  if (n <= kLeaf) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_rec(v, h) + pairwise_rec(v + h, n - h);
}

double pairwise_fn_rec(std::size_t lo, std::size_t n, const std::function<double(std::size_t)>& f) {
  if (n <= kLeaf) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += f(lo + i);
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_fn_rec(lo, h, f) + pairwise_fn_rec(lo + h, n - h, f);
}
}  // namespace

double pairwise_sum(std::span<const double> v) { return pairwise_rec(v.data(), v.size()); }

double pairwise_sum(std::size_t n, const std::function<double(std::size_t)>& f) {
  return pairwise_fn_rec(0, n, f);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t, std::size_t)>& chunk_fn) {
  if (workers < 1) workers = 1;
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n ? n : 1);
  if (w <= 1) {
    chunk_fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(w);
  pool.reserve(w);
  const std::size_t base = n / w, rem = n % w;
  std::size_t lo = 0;
  for (std::size_t t = 0; t < w; ++t) {
    const std::size_t len = base + (t < rem ? 1 : 0);
    pool.emplace_back([&, t, lo, len] {
      try {
        chunk_fn(lo, lo + len);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
    lo += len;
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace mvsde
