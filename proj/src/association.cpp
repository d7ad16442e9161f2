#include "streetinv/association.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <map>
#include <stdexcept>

#include "streetinv/hungarian.hpp"
#include "streetinv/union_find.hpp"

namespace streetinv {

MatchMatrix::MatchMatrix(std::vector<ObsId> obs_ids, Eigen::MatrixXd scores)
    : obs_ids_(std::move(obs_ids)), scores_(std::move(scores)) {
  const auto n = static_cast<Eigen::Index>(obs_ids_.size());
  if (scores_.rows() != n || scores_.cols() != n) {
    throw std::invalid_argument("match matrix size does not match id list");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (scores_(i, i) != 0.0) {
      throw std::invalid_argument("match matrix diagonal must be zero");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = scores_(i, j);
      if (!(s >= 0.0 && s <= 1.0)) {
        throw std::invalid_argument("match score outside [0,1]");
      }
      if (std::abs(s - scores_(j, i)) > 1e-9) {
        throw std::invalid_argument("match matrix is not symmetric");
      }
    }
  }
}

double ray_ray_distance(const Observation& a, const Observation& b) {
  const Vec3& u = a.direction;
  const Vec3& v = b.direction;
  const Vec3 w0 = a.exposure - b.exposure;
  const double uv = u.dot(v);
  const double du = u.dot(w0);
  const double dv = v.dot(w0);
  const double denom = 1.0 - uv * uv;

  const auto gap = [&](double s, double t) {
    return (w0 + s * u - t * v).norm();
  };

  // Unconstrained line-line optimum, then the clamped boundary candidates.
  double best = std::numeric_limits<double>::infinity();
  if (denom > 1e-12) {
    const double s = (uv * dv - du) / denom;
    const double t = (dv - uv * du) / denom;
    if (s >= 0.0 && t >= 0.0) best = gap(s, t);
  }
  // s = 0: minimize over t >= 0.
  best = std::min(best, gap(0.0, std::max(0.0, dv)));
  // t = 0: minimize over s >= 0.
  best = std::min(best, gap(std::max(0.0, -du), 0.0));
  return best;
}

double geometric_score(const Observation& a, const Observation& b,
                       double sigma_g) {
  if (a.category != b.category || a.frame_id == b.frame_id) return 0.0;
  const double g = ray_ray_distance(a, b);
  return std::clamp(std::exp(-g / sigma_g), 0.0, 1.0);
}

MatchMatrix score_observations(std::span<const Observation* const> observations,
                               const PairScorer& scorer) {
  const auto n = static_cast<Eigen::Index>(observations.size());
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(n, n);
  std::vector<ObsId> ids;
  ids.reserve(observations.size());
  for (const Observation* o : observations) ids.push_back(o->obs_id);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double s = std::clamp(scorer(*observations[i], *observations[j]), 0.0, 1.0);
      scores(i, j) = s;
      scores(j, i) = s;
    }
  }
  return MatchMatrix(std::move(ids), std::move(scores));
}

std::vector<PairMatch> assign_pairs(
    const MatchMatrix& m, const std::unordered_map<ObsId, FrameId>& frame_of,
    std::span<const FrameId> window, double tau) {
  // Matrix indices grouped by frame, in matrix order.
  std::map<FrameId, std::vector<std::size_t>> by_frame;
  for (FrameId f : window) by_frame[f];
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto it = frame_of.find(m.obs_ids()[i]);
    if (it == frame_of.end()) {
      throw std::invalid_argument("observation " + std::to_string(m.obs_ids()[i]) +
                                  " has no frame");
    }
    const auto slot = by_frame.find(it->second);
    if (slot != by_frame.end()) slot->second.push_back(i);
  }

  std::vector<PairMatch> out;
  for (auto fa = by_frame.begin(); fa != by_frame.end(); ++fa) {
    for (auto fb = std::next(fa); fb != by_frame.end(); ++fb) {
      const auto& rows = fa->second;
      const auto& cols = fb->second;
      if (rows.empty() || cols.empty()) continue;
      Eigen::MatrixXd block(rows.size(), cols.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
          block(r, c) = m.score(rows[r], cols[c]);
        }
      }
      const std::vector<int> assignment = max_weight_assignment(block);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const int c = assignment[r];
        if (c < 0) continue;
        const double s = block(r, c);
        if (s < tau) continue;
        ObsId a = m.obs_ids()[rows[r]];
        ObsId b = m.obs_ids()[cols[c]];
        if (a > b) std::swap(a, b);
        out.push_back({a, b, s});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const PairMatch& x, const PairMatch& y) {
    return std::tie(x.obs_a, x.obs_b) < std::tie(y.obs_a, y.obs_b);
  });
  return out;
}

std::vector<Cluster> transitive_cluster(std::span<const PairMatch> pairs,
                                        std::span<const ObsId> all_obs) {
  std::vector<ObsId> ids(all_obs.begin(), all_obs.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  const auto index_of = [&ids](ObsId id) -> std::size_t {
    const auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) {
      throw std::invalid_argument("match references unknown observation " +
                                  std::to_string(id));
    }
    return static_cast<std::size_t>(it - ids.begin());
  };

  UnionFind uf(ids.size());
  for (const PairMatch& p : pairs) uf.unite(index_of(p.obs_a), index_of(p.obs_b));

  // ids are ascending, so first-seen roots order clusters by smallest member.
  std::map<std::size_t, std::size_t> root_to_cluster;
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::size_t root = uf.find(i);
    auto [it, inserted] = root_to_cluster.emplace(root, clusters.size());
    if (inserted) {
      Cluster c;
      c.cluster_id = static_cast<int>(clusters.size());
      clusters.push_back(std::move(c));
    }
    clusters[it->second].members.push_back(ids[i]);
  }
  return clusters;
}

}  // namespace streetinv
