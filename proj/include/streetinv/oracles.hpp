#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "streetinv/triangulation.hpp"

namespace streetinv::oracle {

struct GridBounds {
  Vec3 lower = Vec3::Zero();
  Vec3 upper = Vec3::Zero();
};

// Exhaustive argmin of energy() over the grid lower + step * k within bounds.
Vec3 grid_center(std::span<const Ray> rays, const GridBounds& bounds,
                 double step);

// Exact argmin over the fine grid of a large box, searched as an exhaustive
// coarse pass followed by exhaustive fine windows. A fine window is re-centred
// until its argmin is strictly interior.
Vec3 grid_center_multilevel(std::span<const Ray> rays, const GridBounds& bounds,
                            double fine_step, double coarse_step,
                            int window_half_width = 24);

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), ascending by row
  double total = 0.0;
};

// Enumerates every one-to-one assignment of the smaller side and returns the
// maximum total score; ties go to the lexicographically smallest column
// sequence. Throws std::invalid_argument when either side exceeds 7.
Assignment enumerate_assignment(const Eigen::MatrixXd& block);

}  // namespace streetinv::oracle
