#pragma once

#include <vector>

namespace mvsde {

// Exact minimum-cost perfect matching on a dense n x n cost matrix
// (row-major) by shortest augmenting paths with dual potentials, O(n^3).
// Returns the optimal total cost; row_to_col receives the matching.
double solve_assignment(const std::vector<double>& cost, int n, std::vector<int>& row_to_col);

}  // namespace mvsde
