#include "mvsde/assignment.hpp"

#include <limits>

#include "mvsde/common.hpp"

namespace mvsde {

double solve_assignment(const std::vector<double>& cost, int n, std::vector<int>& row_to_col) {
  if (n <= 0 || cost.size() != static_cast<std::size_t>(n) * n)
    throw InvalidArgument("solve_assignment: cost matrix must be n*n");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-indexed duals and matching; col_to_row[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> col_to_row(n + 1, 0), path(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    col_to_row[0] = i;
    int j0 = 0;
    std::vector<double> min_red(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = col_to_row[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double red = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (red < min_red[j]) {
          min_red[j] = red;
          path[j] = j0;
        }
        if (min_red[j] < delta) {
          delta = min_red[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[col_to_row[j]] += delta;
          v[j] -= delta;
        } else {
          min_red[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_to_row[j0] != 0);
    do {
      const int j1 = path[j0];
      col_to_row[j0] = col_to_row[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  row_to_col.assign(n, -1);
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    row_to_col[col_to_row[j] - 1] = j - 1;
    total += cost[static_cast<std::size_t>(col_to_row[j] - 1) * n + (j - 1)];
  }
  return total;
}

}  // namespace mvsde
