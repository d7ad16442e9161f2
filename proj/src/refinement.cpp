#include "streetinv/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>

#include "streetinv/union_find.hpp"

namespace streetinv {

namespace {

Cluster singleton(ObsId id) {
  Cluster c;
  c.members = {id};
  return c;
}

int next_cluster_id(const std::vector<Cluster>& clusters) {
  int id = 0;
  for (const auto& c : clusters) id = std::max(id, c.cluster_id + 1);
  return id;
}

// Common category of all members, absent when mixed.
std::optional<std::string> cluster_category(const Cluster& c,
                                            const ObservationStore& obs) {
  if (c.members.empty()) return std::nullopt;
  const std::string& first = obs.at(c.members.front()).category;
  for (ObsId id : c.members) {
    if (obs.at(id).category != first) return std::nullopt;
  }
  return first;
}

bool in_front(const Observation& o, const Vec3& c) {
  return (c - o.exposure).dot(o.direction) > 0.0;
}

// Sets center and residuals from a fresh estimate; clears them when degenerate.
bool relocalize(Cluster& c, const ObservationStore& obs) {
  c.center.reset();
  c.residuals.reset();
  if (c.members.size() < 2) return false;
  const auto rays = rays_of(c.members, obs);
  const auto est = estimate_center(rays);
  if (!est) return false;
  c.center = est->center;
  c.residuals = est->residuals;
  return true;
}

}  // namespace

double RefineConfig::split_threshold(const std::string& category) const {
  const auto it = tau_split_by_category.find(category);
  return it == tau_split_by_category.end() ? tau_split : it->second;
}

double RefineConfig::merge_threshold(const std::string& category) const {
  const auto it = tau_merge_by_category.find(category);
  return it == tau_merge_by_category.end() ? tau_merge : it->second;
}

void RefineConfig::validate() const {
  const auto check = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(what) + " must be positive");
    }
  };
  check(tau_split, "tau_split");
  check(tau_merge, "tau_merge");
  for (const auto& [cat, v] : tau_split_by_category) check(v, "tau_split");
  for (const auto& [cat, v] : tau_merge_by_category) check(v, "tau_merge");
  if (!(tau_scale > 1.0) || !std::isfinite(tau_scale)) {
    throw std::invalid_argument("tau_scale must be greater than 1");
  }
}

double estimate_physical_size(const Observation& o, const Vec3& c_tri,
                              BoxDimension dimension) {
  const double s2d =
      dimension == BoxDimension::kHeight ? o.box_h_norm : o.box_w_norm;
  return s2d * std::abs((c_tri - o.exposure).dot(o.direction));
}

std::vector<Ray> rays_of(std::span<const ObsId> members,
                         const ObservationStore& obs) {
  std::vector<Ray> rays;
  rays.reserve(members.size());
  for (ObsId id : members) rays.push_back(ray_of(obs.at(id)));
  return rays;
}

std::vector<Cluster> canonicalize(std::vector<Cluster> clusters) {
  for (auto& c : clusters) {
    if (std::is_sorted(c.members.begin(), c.members.end())) continue;
    std::vector<std::size_t> order(c.members.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return c.members[a] < c.members[b];
    });
    std::vector<ObsId> members;
    std::vector<double> residuals;
    for (std::size_t i : order) {
      members.push_back(c.members[i]);
      if (c.residuals) residuals.push_back((*c.residuals)[i]);
    }
    c.members = std::move(members);
    if (c.residuals) c.residuals = std::move(residuals);
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) {
              return a.members.front() < b.members.front();
            });
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    clusters[i].cluster_id = static_cast<int>(i);
  }
  return clusters;
}

std::vector<Cluster> localize_clusters(std::vector<Cluster> clusters,
                                       const ObservationStore& obs) {
  for (auto& c : clusters) relocalize(c, obs);
  return clusters;
}

std::vector<Cluster> split_overmatched(const std::vector<Cluster>& clusters,
                                       const ObservationStore& obs,
                                       const RefineConfig& cfg) {
  std::vector<Cluster> out;
  int next_id = next_cluster_id(clusters);
  const auto emit_singleton = [&](ObsId id) {
    Cluster s = singleton(id);
    s.cluster_id = next_id++;
    out.push_back(std::move(s));
  };

  for (const Cluster& cluster : clusters) {
    if (cluster.members.size() < 2) {
      out.push_back(cluster);
      continue;
    }
    const auto rays = rays_of(cluster.members, obs);
    const auto est = estimate_center(rays);
    if (!est) {
      for (ObsId id : cluster.members) emit_singleton(id);
      continue;
    }

    Cluster kept;
    kept.cluster_id = cluster.cluster_id;
    kept.members = cluster.members;
    kept.center = est->center;
    kept.residuals = est->residuals;
    while (kept.members.size() >= 2) {
      std::size_t worst = kept.members.size();
      double worst_excess = 0.0;
      for (std::size_t i = 0; i < kept.members.size(); ++i) {
        const double excess =
            (*kept.residuals)[i] - cfg.split_threshold(obs.at(kept.members[i]).category);
        if (excess > worst_excess) {
          worst_excess = excess;
          worst = i;
        }
      }
      if (worst == kept.members.size()) break;
      emit_singleton(kept.members[worst]);
      kept.members.erase(kept.members.begin() + static_cast<std::ptrdiff_t>(worst));
      if (!relocalize(kept, obs) && kept.members.size() >= 2) {
        for (ObsId id : kept.members) emit_singleton(id);
        kept.members.clear();
      }
    }
    if (kept.members.empty()) continue;
    out.push_back(std::move(kept));
  }
  return out;
}

std::vector<Cluster> merge_undermatched(const std::vector<Cluster>& clusters,
                                        const ObservationStore& obs,
                                        const RefineConfig& cfg) {
  std::vector<Cluster> result = clusters;
  std::sort(result.begin(), result.end(), [](const Cluster& a, const Cluster& b) {
    return a.cluster_id < b.cluster_id;
  });

  std::vector<std::size_t> singles;
  std::vector<std::size_t> multis;
  for (std::size_t i = 0; i < result.size(); ++i) {
    if (result[i].members.size() == 1) {
      singles.push_back(i);
    } else if (result[i].members.size() >= 2) {
      if (!result[i].center) relocalize(result[i], obs);
      multis.push_back(i);
    }
  }

  // Centers and categories are frozen before any absorption.
  struct Target {
    std::size_t index;
    Vec3 center;
    std::string category;
    std::set<FrameId> frames;
  };
  std::vector<Target> targets;
  for (std::size_t idx : multis) {
    const Cluster& m = result[idx];
    const auto cat = cluster_category(m, obs);
    if (!m.center || !cat) continue;
    Target t{idx, *m.center, *cat, {}};
    for (ObsId id : m.members) t.frames.insert(obs.at(id).frame_id);
    targets.push_back(std::move(t));
  }

  std::vector<bool> changed(result.size(), false);
  std::vector<bool> consumed(result.size(), false);

  // (a) singleton -> nearest multi-member cluster
  for (std::size_t si : singles) {
    const Observation& o = obs.at(result[si].members.front());
    const double limit = cfg.merge_threshold(o.category);
    const Target* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const Target& t : targets) {
      if (t.category != o.category || t.frames.count(o.frame_id) != 0) continue;
      if (!in_front(o, t.center)) continue;
      const double d = point_ray_distance(t.center, ray_of(o));
      if (d < limit && d < best_dist) {  // targets ascend by id: ties keep lower
        best = &t;
        best_dist = d;
      }
    }
    if (best == nullptr) continue;
    result[best->index].members.push_back(o.obs_id);
    changed[best->index] = true;
    consumed[si] = true;
  }

  // (b) pairs of remaining singletons
  std::vector<std::size_t> remaining;
  for (std::size_t si : singles) {
    if (!consumed[si]) remaining.push_back(si);
  }
  UnionFind groups(remaining.size());
  std::vector<std::set<FrameId>> group_frames(remaining.size());
  std::vector<std::vector<ObsId>> group_members(remaining.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) {
    const ObsId id = result[remaining[i]].members.front();
    group_frames[i].insert(obs.at(id).frame_id);
    group_members[i].push_back(id);
  }
  // A joined group must still triangulate consistently as a whole.
  const auto consistent = [&](const std::vector<ObsId>& ids, double limit) {
    const auto rays = rays_of(ids, obs);
    const auto est = estimate_center(rays);
    if (!est) return false;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const Observation& o = obs.at(ids[k]);
      if (!(est->residuals[k] < limit) || !in_front(o, est->center)) return false;
      const double size = estimate_physical_size(o, est->center, BoxDimension::kHeight);
      lo = std::min(lo, size);
      hi = std::max(hi, size);
    }
    return lo > 0.0 && hi / lo < cfg.tau_scale;
  };

  for (std::size_t i = 0; i < remaining.size(); ++i) {
    const Observation& oi = obs.at(result[remaining[i]].members.front());
    const double limit = cfg.merge_threshold(oi.category);
    for (std::size_t j = i + 1; j < remaining.size(); ++j) {
      const Observation& oj = obs.at(result[remaining[j]].members.front());
      if (oi.category != oj.category || oi.frame_id == oj.frame_id) continue;
      const std::size_t gi = groups.find(i);
      const std::size_t gj = groups.find(j);
      if (gi == gj) continue;
      const bool frame_clash = std::any_of(
          group_frames[gj].begin(), group_frames[gj].end(),
          [&](FrameId f) { return group_frames[gi].count(f) != 0; });
      if (frame_clash) continue;

      const Ray ri = ray_of(oi);
      const Ray rj = ray_of(oj);
      // Both residuals below the limit imply the lines pass within 2*limit.
      const Vec3 n = ri.direction.cross(rj.direction);
      if (n.norm() > 1e-12 &&
          std::abs((rj.origin - ri.origin).dot(n.normalized())) >= 2.0 * limit) {
        continue;
      }
      const Ray pair[2] = {ri, rj};
      const auto est = estimate_center(pair);
      if (!est) continue;
      const Vec3& c = est->center;
      if (!(est->residuals[0] < limit && est->residuals[1] < limit)) continue;
      if (!in_front(oi, c) || !in_front(oj, c)) continue;
      const double size_i = estimate_physical_size(oi, c, BoxDimension::kHeight);
      const double size_j = estimate_physical_size(oj, c, BoxDimension::kHeight);
      if (!(size_i > 0.0 && size_j > 0.0)) continue;
      if (std::max(size_i / size_j, size_j / size_i) >= cfg.tau_scale) continue;

      std::vector<ObsId> joined = group_members[gi];
      joined.insert(joined.end(), group_members[gj].begin(), group_members[gj].end());
      if (joined.size() > 2 && !consistent(joined, limit)) continue;

      groups.unite(gi, gj);
      const std::size_t root = groups.find(i);
      const std::size_t other = root == gi ? gj : gi;
      group_frames[root].insert(group_frames[other].begin(), group_frames[other].end());
      group_members[root] = std::move(joined);
      group_members[other].clear();
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> members_by_group;
  for (std::size_t i = 0; i < remaining.size(); ++i) {
    members_by_group[groups.find(i)].push_back(i);
  }
  std::vector<Cluster> out;
  int next_id = next_cluster_id(result);
  for (std::size_t i = 0; i < result.size(); ++i) {
    if (consumed[i]) continue;
    if (changed[i]) {
      std::sort(result[i].members.begin(), result[i].members.end());
      relocalize(result[i], obs);
    }
  }
  std::set<std::size_t> in_new_group;
  for (const auto& [root, idxs] : members_by_group) {
    if (idxs.size() < 2) continue;
    Cluster merged;
    merged.cluster_id = next_id++;
    for (std::size_t k : idxs) {
      merged.members.push_back(result[remaining[k]].members.front());
      in_new_group.insert(remaining[k]);
    }
    std::sort(merged.members.begin(), merged.members.end());
    relocalize(merged, obs);
    out.push_back(std::move(merged));
  }
  for (std::size_t i = 0; i < result.size(); ++i) {
    if (consumed[i] || in_new_group.count(i) != 0) continue;
    out.push_back(std::move(result[i]));
  }
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) {
    return a.cluster_id < b.cluster_id;
  });
  return out;
}

std::vector<Cluster> refine(const std::vector<Cluster>& clusters,
                            const ObservationStore& obs,
                            const RefineConfig& cfg) {
  const auto split = split_overmatched(clusters, obs, cfg);
  const auto merged = merge_undermatched(split, obs, cfg);

  // Step 3: re-estimate; violators left by merging are pruned one at a time
  // until the remaining rays are consistent.
  std::vector<Cluster> out;
  for (Cluster c : merged) {
    while (!c.members.empty()) {
      if (c.members.size() < 2) {
        c.center.reset();
        c.residuals.reset();
        out.push_back(std::move(c));
        break;
      }
      if (!relocalize(c, obs)) {
        for (ObsId id : c.members) out.push_back(singleton(id));
        break;
      }
      // Drop the worst violator, then re-estimate.
      std::size_t worst = c.members.size();
      double worst_excess = 0.0;
      for (std::size_t i = 0; i < c.members.size(); ++i) {
        const double excess =
            (*c.residuals)[i] - cfg.split_threshold(obs.at(c.members[i]).category);
        if (excess > worst_excess) {
          worst_excess = excess;
          worst = i;
        }
      }
      if (worst == c.members.size()) {
        out.push_back(std::move(c));
        break;
      }
      out.push_back(singleton(c.members[worst]));
      c.members.erase(c.members.begin() + static_cast<std::ptrdiff_t>(worst));
    }
  }
  return canonicalize(std::move(out));
}

}  // namespace streetinv
