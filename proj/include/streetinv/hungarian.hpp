#pragma once

#include <vector>

#include <Eigen/Core>

namespace streetinv {

// Maximum-weight one-to-one assignment on a rectangular weight matrix
// (Kuhn-Munkres with potentials, O(n^2 m)). Returns, for each row, the
// assigned column or -1. Every row is assigned when rows <= cols and every
// column otherwise; with nonnegative weights this attains the maximum total.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights);

}  // namespace streetinv
