#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "streetinv/association.hpp"
#include "streetinv/cluster.hpp"
#include "streetinv/observation_store.hpp"

namespace streetinv::testing {

inline constexpr double kPi = 3.14159265358979323846;

// Observation looking from `exposure` at `target`, with a normalized box
// height consistent with an object of the given physical height.
inline Observation looking_at(ObsId id, FrameId frame, const Vec3& exposure,
                              const Vec3& target, const std::string& category,
                              double height = 1.0) {
  Observation o;
  o.obs_id = id;
  o.frame_id = frame;
  o.category = category;
  o.exposure = exposure;
  const Vec3 v = target - exposure;
  o.direction = v.normalized();
  o.box_h_norm = height / (v.norm() * kPi);
  o.box_w_norm = 0.5 * height / (v.norm() * 2.0 * kPi);
  return o;
}

inline Vec3 camera_at(double x) { return {x, 0.0, 2.5}; }

// Two nearby signs seen along a street. Rays A, B, C (ids 0..2) see target 1;
// D and E (ids 3, 4) see target 2. The initial matching wrongly chains E with
// A, B, C and leaves D alone.
struct SplitMergeScene {
  Vec3 target1{15.0, 6.0, 1.5};
  Vec3 target2;
  ObservationStore store;
  std::vector<Cluster> initial;
};

inline SplitMergeScene split_merge_scene() {
  SplitMergeScene s;
  const Vec3 cam_e = camera_at(30.0);
  // E's line passes 1 m beside target 1 on its way to target 2.
  const Vec3 to_t1 = s.target1 - cam_e;
  const Vec3 side = Vec3(-to_t1.y(), to_t1.x(), 0.0).normalized();
  const Vec3 aim = (s.target1 + side - cam_e).normalized();
  s.target2 = cam_e + 0.6 * to_t1.norm() * aim;

  const std::string cat = "traffic_sign";
  s.store.add(looking_at(0, 0, camera_at(0.0), s.target1, cat));
  s.store.add(looking_at(1, 1, camera_at(10.0), s.target1, cat));
  s.store.add(looking_at(2, 2, camera_at(20.0), s.target1, cat));
  s.store.add(looking_at(3, 4, camera_at(40.0), s.target2, cat));
  s.store.add(looking_at(4, 3, cam_e, s.target2, cat));

  s.initial = {Cluster{0, {0, 1, 2, 4}, {}, {}}, Cluster{1, {3}, {}, {}}};
  return s;
}

// Five rays in one cluster; A to D (ids 0..3) see one sign, E (id 4) passes
// 1.5 m beside it.
struct OutlierScene {
  Vec3 target{15.0, 6.0, 1.5};
  ObservationStore store;
  Cluster cluster;
};

inline OutlierScene outlier_scene() {
  OutlierScene s;
  const std::string cat = "traffic_sign";
  const double xs[] = {0.0, 10.0, 20.0, 40.0};
  for (int i = 0; i < 4; ++i) {
    s.store.add(looking_at(i, i < 3 ? i : 4, camera_at(xs[i]), s.target, cat));
  }
  const Vec3 cam_e = camera_at(30.0);
  const Vec3 to_t = s.target - cam_e;
  const Vec3 side = Vec3(-to_t.y(), to_t.x(), 0.0).normalized();
  s.store.add(looking_at(4, 3, cam_e, s.target + 1.5 * side, cat));
  s.cluster = Cluster{0, {0, 1, 2, 3, 4}, {}, {}};
  return s;
}

}  // namespace streetinv::testing
