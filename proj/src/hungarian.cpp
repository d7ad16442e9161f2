#include "streetinv/hungarian.hpp"

#include <limits>

namespace streetinv {

namespace {

// Minimum-cost assignment of every row of an n x m cost matrix (n <= m).
// 1-based potentials formulation.
std::vector<int> min_cost_rows(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights) {
  const auto rows = weights.rows();
  const auto cols = weights.cols();
  std::vector<int> out(static_cast<std::size_t>(rows), -1);
  if (rows == 0 || cols == 0) return out;

  const double top = weights.maxCoeff();
  if (rows <= cols) {
    return min_cost_rows((top - weights.array()).matrix());
  }
  const Eigen::MatrixXd cost = (top - weights.transpose().array()).matrix();
  const std::vector<int> col_to_row = min_cost_rows(cost);
  for (std::size_t c = 0; c < col_to_row.size(); ++c) {
    if (col_to_row[c] >= 0) out[static_cast<std::size_t>(col_to_row[c])] = static_cast<int>(c);
  }
  return out;
}

}  // namespace streetinv
