#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "streetinv/cluster.hpp"
#include "streetinv/observation_store.hpp"
#include "streetinv/triangulation.hpp"

namespace streetinv {

// Distance thresholds for splitting and merging, with per-category overrides.
struct RefineConfig {
  double tau_split = 0.5;  // meters
  double tau_merge = 0.5;  // meters
  double tau_scale = 1.5;  // size ratio, > 1
  std::map<std::string, double> tau_split_by_category;
  std::map<std::string, double> tau_merge_by_category;

  double split_threshold(const std::string& category) const;
  double merge_threshold(const std::string& category) const;

  // Throws std::invalid_argument on a non-positive threshold or tau_scale <= 1.
  void validate() const;
};

enum class BoxDimension { kWidth, kHeight };

// Implied physical size: normalized box dimension times the depth of c_tri
// along the viewing ray.
double estimate_physical_size(const Observation& o, const Vec3& c_tri,
                              BoxDimension dimension);

// Rays for the given members, in member order.
std::vector<Ray> rays_of(std::span<const ObsId> members,
                         const ObservationStore& obs);

// Triangulates every cluster with >= 2 members, leaving singletons and
// degenerate clusters unlocalized. No membership changes.
std::vector<Cluster> localize_clusters(std::vector<Cluster> clusters,
                                       const ObservationStore& obs);

// Step 1: per cluster, repeatedly removes the member with the largest residual
// above tau_split and re-estimates. Pruned members and the members of
// degenerate clusters become singletons.
std::vector<Cluster> split_overmatched(const std::vector<Cluster>& clusters,
                                       const ObservationStore& obs,
                                       const RefineConfig& cfg);

// Step 2: absorb singletons into the nearest multi-member cluster, then join
// geometrically and dimensionally consistent singleton pairs. Joined pairs
// chain into larger groups only while the whole group stays consistent.
std::vector<Cluster> merge_undermatched(const std::vector<Cluster>& clusters,
                                        const ObservationStore& obs,
                                        const RefineConfig& cfg);

// Steps 1-3. Output is a partition renumbered by smallest member, where every
// multi-member cluster is localized with all residuals <= tau_split.
std::vector<Cluster> refine(const std::vector<Cluster>& clusters,
                            const ObservationStore& obs,
                            const RefineConfig& cfg);

// Sorts members, orders clusters by smallest member and renumbers 0..n-1.
std::vector<Cluster> canonicalize(std::vector<Cluster> clusters);

}  // namespace streetinv
