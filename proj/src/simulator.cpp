#include "streetinv/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include <Eigen/Geometry>

namespace streetinv {

namespace {

constexpr double kPi = std::numbers::pi;

class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }
  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<int>(mean)(engine_);
  }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Rotates d by `angle` about a uniformly random axis perpendicular to d.
Vec3 perturb_direction(const Vec3& d, double angle, SceneRng& rng) {
  const Vec3 helper = std::abs(d.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = d.cross(helper).normalized();
  const Vec3 e2 = d.cross(e1);
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  const Vec3 axis = std::cos(phi) * e1 + std::sin(phi) * e2;
  return Eigen::AngleAxisd(angle, axis) * d;
}

Detection2D detection_toward(const Vec3& world_dir, const CameraPose& pose,
                             double h_norm, double w_norm, const std::string& category,
                             double confidence, double image_w, double image_h) {
  const Mat3 r = rotation_from_euler(pose.heading, pose.pitch, pose.roll);
  const Vec3 cam = r.transpose() * world_dir;
  const double az = std::atan2(cam.y(), cam.x());
  const double el = std::asin(std::clamp(cam.z(), -1.0, 1.0));
  Detection2D det;
  det.frame_id = pose.frame_id;
  det.center_x = std::clamp((az + kPi) / (2.0 * kPi) * image_w, 0.0, image_w);
  det.center_y = std::clamp((1.0 - (el + kPi / 2.0) / kPi) * image_h, 0.0, image_h);
  det.box_w = w_norm * image_w;
  det.box_h = h_norm * image_h;
  det.image_w = image_w;
  det.image_h = image_h;
  det.category = category;
  det.confidence = confidence;
  return det;
}

double clamp_norm(double v) { return std::clamp(v, 1e-6, 1.0); }

}  // namespace

void SceneSpec::validate() const {
  if (trajectory.empty()) throw std::invalid_argument("scene has an empty trajectory");
  if (objects.empty()) throw std::invalid_argument("scene has no objects");
  std::set<FrameId> frames;
  for (const auto& p : trajectory) {
    if (!frames.insert(p.frame_id).second) {
      throw std::invalid_argument("duplicate frame id in trajectory");
    }
  }
  if (!(noise.direction_sigma >= 0.0) || !(noise.pose_sigma >= 0.0)) {
    throw std::invalid_argument("noise sigmas must be nonnegative");
  }
  if (!(noise.drop_probability >= 0.0 && noise.drop_probability <= 1.0)) {
    throw std::invalid_argument("drop probability must be in [0,1]");
  }
  if (!(noise.clutter_rate >= 0.0)) {
    throw std::invalid_argument("clutter rate must be nonnegative");
  }
  if (!(min_range >= 0.0 && max_range > min_range)) {
    throw std::invalid_argument("invalid visibility range");
  }
  if (!(image_w > 0.0 && image_h > 0.0)) {
    throw std::invalid_argument("invalid image size");
  }
}

SimulatedScene generate_scene(const SceneSpec& spec) {
  spec.validate();
  SceneRng rng(spec.seed);

  std::vector<std::string> categories;
  for (const auto& o : spec.objects) categories.push_back(o.category);
  std::sort(categories.begin(), categories.end());
  categories.erase(std::unique(categories.begin(), categories.end()), categories.end());

  SimulatedScene scene;
  scene.truth.objects = spec.objects;
  std::vector<ObjectId> label_of;

  for (const CameraPose& truth_pose : spec.trajectory) {
    CameraPose recorded = truth_pose;
    for (int k = 0; k < 3; ++k) {
      recorded.position(k) += spec.noise.pose_sigma * rng.normal();
    }
    scene.poses.push_back(recorded);

    for (const TruthObject& obj : spec.objects) {
      const Vec3 offset = obj.center - truth_pose.position;
      const double depth = offset.norm();
      // Draws happen for every object so the stream does not depend on range.
      const double angle = spec.noise.direction_sigma * rng.normal();
      const bool dropped = rng.bernoulli(spec.noise.drop_probability);
      const double confidence = rng.uniform(0.5, 1.0);
      Vec3 dir = offset / std::max(depth, 1e-12);
      dir = perturb_direction(dir, angle, rng);
      if (depth < spec.min_range || depth > spec.max_range || dropped) continue;

      const double h_norm = clamp_norm(obj.height / (depth * kPi));
      const double width = std::max(0.2, 0.5 * obj.height);
      const double w_norm = clamp_norm(width / (depth * 2.0 * kPi));
      scene.detections.push_back(detection_toward(dir, recorded, h_norm, w_norm,
                                                  obj.category, confidence,
                                                  spec.image_w, spec.image_h));
      label_of.push_back(obj.object_id);
    }

    const int n_clutter = rng.poisson(spec.noise.clutter_rate);
    for (int k = 0; k < n_clutter; ++k) {
      const double az = rng.uniform(-kPi, kPi);
      const double el = rng.uniform(-0.2, 0.3);
      const std::string& cat = categories[rng.index(categories.size())];
      const double h_norm = rng.uniform(0.005, 0.05);
      const double confidence = rng.uniform(0.3, 1.0);
      const Vec3 world = rotation_from_euler(recorded.heading, recorded.pitch,
                                             recorded.roll) *
                         angles_to_camera_dir(az, el);
      scene.detections.push_back(detection_toward(world, recorded, h_norm,
                                                  0.5 * h_norm, cat, confidence,
                                                  spec.image_w, spec.image_h));
      label_of.push_back(kClutter);
    }
  }

  const auto n = static_cast<Eigen::Index>(scene.detections.size());
  scene.truth.pair_matrix = BinaryMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Detection2D& det = scene.detections[static_cast<std::size_t>(i)];
    const auto pose = std::find_if(scene.poses.begin(), scene.poses.end(),
                                   [&](const CameraPose& p) { return p.frame_id == det.frame_id; });
    scene.observations.add(build_observation(det, *pose, i));
    scene.truth.obs_ids.push_back(i);
    scene.truth.labels[i] = label_of[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < i; ++j) {
      const ObjectId a = label_of[static_cast<std::size_t>(i)];
      if (a != kClutter && a == label_of[static_cast<std::size_t>(j)]) {
        scene.truth.pair_matrix(i, j) = scene.truth.pair_matrix(j, i) = 1;
      }
    }
  }
  return scene;
}

std::vector<CameraPose> straight_trajectory(double length, double spacing,
                                            double camera_height) {
  if (!(spacing > 0.0) || !(length >= 0.0)) {
    throw std::invalid_argument("trajectory needs positive spacing");
  }
  std::vector<CameraPose> poses;
  const auto n = static_cast<int>(std::floor(length / spacing + 1e-9)) + 1;
  for (int i = 0; i < n; ++i) {
    CameraPose p;
    p.frame_id = i;
    p.position = Vec3(i * spacing, 0.0, camera_height);
    poses.push_back(p);
  }
  return poses;
}

const std::vector<CategoryProfile>& default_categories() {
  static const std::vector<CategoryProfile> kProfiles = {
      {"fire_hydrant", 0.8, 0.4},
      {"street_light", 8.0, 4.0},
      {"surveillance_camera", 0.4, 5.5},
      {"traffic_sign", 0.9, 2.8},
      {"trash_bin", 1.1, 0.55},
  };
  return kProfiles;
}

std::vector<TruthObject> random_objects(const SceneLayout& layout,
                                        std::uint64_t seed) {
  SceneRng rng(seed);
  const auto& profiles = default_categories();
  std::vector<TruthObject> objects;
  int attempts = 0;
  while (static_cast<int>(objects.size()) < layout.n_objects) {
    if (++attempts > 100000) {
      throw std::invalid_argument("cannot place objects at the requested separation");
    }
    const CategoryProfile& prof = profiles[objects.size() % profiles.size()];
    const double x = rng.uniform(0.0, layout.length);
    const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const double y = side * rng.uniform(layout.lateral_min, layout.lateral_max);
    const Vec3 c(x, y, prof.center_z);
    const bool clear = std::none_of(objects.begin(), objects.end(), [&](const TruthObject& o) {
      return (o.center - c).head<2>().norm() < layout.min_separation;
    });
    if (!clear) continue;
    TruthObject obj;
    obj.object_id = static_cast<ObjectId>(objects.size());
    obj.category = prof.name;
    obj.center = c;
    obj.height = prof.height;
    objects.push_back(obj);
  }
  return objects;
}

SceneSpec default_scene_spec(std::uint64_t seed, int n_objects) {
  SceneLayout layout;
  layout.n_objects = n_objects;
  SceneSpec spec;
  spec.trajectory = straight_trajectory(layout.length, layout.spacing, layout.camera_height);
  spec.objects = random_objects(layout, seed ^ 0x9e3779b97f4a7c15ULL);
  spec.noise.direction_sigma = 0.2 * kPi / 180.0;
  spec.noise.pose_sigma = 0.02;
  spec.seed = seed;
  return spec;
}

std::vector<PairMatch> corrupt_links(const std::vector<PairMatch>& pairs,
                                     const ObservationStore& obs,
                                     const TruthLabels& labels, double fraction,
                                     std::uint64_t seed) {
  SceneRng rng(seed);
  const auto label = [&](ObsId id) {
    const auto it = labels.find(id);
    return it == labels.end() ? kClutter : it->second;
  };

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng.engine());
  const auto n_bad = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(pairs.size())));

  std::vector<PairMatch> out;
  std::vector<bool> selected(pairs.size(), false);
  for (std::size_t k = 0; k < n_bad && k < order.size(); ++k) selected[order[k]] = true;

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!selected[i]) {
      out.push_back(pairs[i]);
      continue;
    }
    const bool rewire = rng.bernoulli(0.5);
    if (!rewire) continue;
    const Observation& a = obs.at(pairs[i].obs_a);
    std::vector<ObsId> candidates;
    for (const Observation& o : obs) {
      if (o.category != a.category || o.frame_id == a.frame_id) continue;
      if (std::abs(o.frame_id - a.frame_id) > 2) continue;
      if (label(o.obs_id) == label(a.obs_id)) continue;
      candidates.push_back(o.obs_id);
    }
    if (candidates.empty()) continue;
    const ObsId b = candidates[rng.index(candidates.size())];
    out.push_back({std::min(a.obs_id, b), std::max(a.obs_id, b), pairs[i].score});
  }
  std::sort(out.begin(), out.end(), [](const PairMatch& x, const PairMatch& y) {
    return std::tie(x.obs_a, x.obs_b) < std::tie(y.obs_a, y.obs_b);
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const PairMatch& x, const PairMatch& y) {
                          return x.obs_a == y.obs_a && x.obs_b == y.obs_b;
                        }),
            out.end());
  return out;
}

}  // namespace streetinv
