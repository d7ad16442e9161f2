#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "streetinv/types.hpp"

namespace streetinv {

using ObjectId = std::int64_t;
inline constexpr ObjectId kClutter = -1;

struct TruthObject {
  ObjectId object_id = 0;
  std::string category;
  Vec3 center = Vec3::Zero();
  double height = 1.0;  // meters
};

// Ground-truth object per observation; kClutter for false detections.
using TruthLabels = std::unordered_map<ObsId, ObjectId>;

}  // namespace streetinv
