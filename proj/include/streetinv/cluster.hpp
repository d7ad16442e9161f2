#pragma once

#include <optional>
#include <vector>

#include "streetinv/types.hpp"

namespace streetinv {

// A set of observations believed to depict one physical object.
struct Cluster {
  int cluster_id = 0;
  std::vector<ObsId> members;  // sorted ascending
  std::optional<Vec3> center;
  std::optional<std::vector<double>> residuals;  // parallel to members

  bool localized() const { return center.has_value(); }
  std::size_t size() const { return members.size(); }
};

}  // namespace streetinv
