#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvsde {

using Vec = std::vector<double>;

// Thrown when inputs violate a documented precondition (bad dimensions,
// malformed config, out-of-range parameters).
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a computation fails at runtime (non-finite state, failed
// convergence where the contract promises an error rather than a flag).
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a);
double dist2(std::span<const double> a, std::span<const double> b);

// Pairwise (cascade) summation over a fixed index order.  The reduction tree
// depends only on the length, never on thread count, so results are bitwise
// reproducible for any worker setting.
double pairwise_sum(std::span<const double> v);

// Pairwise reduction of f(0..n-1) without materialising the values.
double pairwise_sum(std::size_t n, const std::function<double(std::size_t)>& f);

// Runs fn(i) for i in [0,n) split into contiguous chunks across `workers`
// threads.  Chunk boundaries depend only on n and workers; every fn(i) must
// write to disjoint state, so the result is independent of scheduling.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t, std::size_t)>& chunk_fn);

// Shortest decimal form that round-trips a double (17 significant digits).
std::string format_double(double v);

}  // namespace mvsde
