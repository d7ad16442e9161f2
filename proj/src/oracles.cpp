#include "streetinv/oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace streetinv::oracle {

namespace {

using Index3 = std::array<long, 3>;

struct GridSearch {
  std::span<const Ray> rays;
  Vec3 origin;
  double step;

  Vec3 point(const Index3& k) const {
    return origin + step * Vec3(static_cast<double>(k[0]), static_cast<double>(k[1]),
                                static_cast<double>(k[2]));
  }

  // Exhaustive loop over lo..hi inclusive; first minimum in x-major order wins.
  Index3 argmin(const Index3& lo, const Index3& hi) const {
    Index3 best = lo;
    double best_e = std::numeric_limits<double>::infinity();
    for (long i = lo[0]; i <= hi[0]; ++i) {
      for (long j = lo[1]; j <= hi[1]; ++j) {
        for (long k = lo[2]; k <= hi[2]; ++k) {
          const double e = energy(point({i, j, k}), rays);
          if (e < best_e) {
            best_e = e;
            best = {i, j, k};
          }
        }
      }
    }
    return best;
  }
};

Index3 grid_extent(const GridBounds& b, double step) {
  Index3 n{};
  for (int a = 0; a < 3; ++a) {
    const double span = b.upper(a) - b.lower(a);
    if (span < 0.0) throw std::invalid_argument("grid bounds are inverted");
    n[a] = static_cast<long>(std::floor(span / step + 1e-9));
  }
  return n;
}

}  // namespace

Vec3 grid_center(std::span<const Ray> rays, const GridBounds& bounds, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  const GridSearch search{rays, bounds.lower, step};
  return search.point(search.argmin({0, 0, 0}, grid_extent(bounds, step)));
}

Vec3 grid_center_multilevel(std::span<const Ray> rays, const GridBounds& bounds,
                            double fine_step, double coarse_step, int window_half_width) {
  if (!(fine_step > 0.0) || !(coarse_step >= fine_step)) {
    throw std::invalid_argument("grid steps must satisfy 0 < fine <= coarse");
  }
  const Vec3 coarse = grid_center(rays, bounds, coarse_step);
  const Index3 extent = grid_extent(bounds, fine_step);
  const GridSearch fine{rays, bounds.lower, fine_step};

  Index3 centre{};
  for (int a = 0; a < 3; ++a) {
    centre[a] = std::clamp(std::lround((coarse(a) - bounds.lower(a)) / fine_step), 0L, extent[a]);
  }
  for (int round = 0; round < 10000; ++round) {
    Index3 lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0L, centre[a] - window_half_width);
      hi[a] = std::min(extent[a], centre[a] + window_half_width);
    }
    const Index3 best = fine.argmin(lo, hi);
    bool interior = true;
    for (int a = 0; a < 3; ++a) {
      const bool on_low_face = best[a] == lo[a] && lo[a] > 0;
      const bool on_high_face = best[a] == hi[a] && hi[a] < extent[a];
      if (on_low_face || on_high_face) interior = false;
    }
    if (interior) return fine.point(best);
    centre = best;
  }
  throw std::runtime_error("multilevel grid search did not settle");
}

namespace {

void enumerate(const Eigen::MatrixXd& block, int row, std::vector<int>& cols,
               std::vector<char>& used, double total, std::vector<int>& best_cols,
               double& best_total) {
  if (row == block.rows()) {
    if (total > best_total) {
      best_total = total;
      best_cols = cols;
    }
    return;
  }
  for (int c = 0; c < block.cols(); ++c) {
    if (used[c]) continue;
    used[c] = 1;
    cols.push_back(c);
    enumerate(block, row + 1, cols, used, total + block(row, c), best_cols, best_total);
    cols.pop_back();
    used[c] = 0;
  }
}

}  // namespace

Assignment enumerate_assignment(const Eigen::MatrixXd& block) {
  if (block.rows() > 7 || block.cols() > 7) {
    throw std::invalid_argument("enumeration is limited to 7 per side");
  }
  Assignment out;
  if (block.rows() == 0 || block.cols() == 0) return out;

  const bool transposed = block.rows() > block.cols();
  const Eigen::MatrixXd work = transposed ? Eigen::MatrixXd(block.transpose()) : block;
  std::vector<int> cols, best_cols;
  std::vector<char> used(static_cast<std::size_t>(work.cols()), 0);
  double best_total = -std::numeric_limits<double>::infinity();
  enumerate(work, 0, cols, used, 0.0, best_cols, best_total);

  for (std::size_t r = 0; r < best_cols.size(); ++r) {
    const int a = static_cast<int>(r);
    const int b = best_cols[r];
    if (transposed) out.pairs.emplace_back(b, a);
    else out.pairs.emplace_back(a, b);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  out.total = best_total;
  return out;
}

}  // namespace streetinv::oracle
