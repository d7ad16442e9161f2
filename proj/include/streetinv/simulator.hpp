#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streetinv/association.hpp"
#include "streetinv/geometry.hpp"
#include "streetinv/metrics.hpp"
#include "streetinv/observation_store.hpp"
#include "streetinv/truth.hpp"

namespace streetinv {

struct NoiseModel {
  double direction_sigma = 0.0;  // radians
  double pose_sigma = 0.0;       // meters, applied to recorded positions
  double drop_probability = 0.0;
  double clutter_rate = 0.0;     // expected false detections per frame
};

struct SceneSpec {
  std::vector<CameraPose> trajectory;  // true poses
  std::vector<TruthObject> objects;
  NoiseModel noise;
  std::uint64_t seed = 0;
  double min_range = 1.0;   // meters
  double max_range = 25.0;  // meters
  double image_w = 8192.0;
  double image_h = 4096.0;

  // Throws std::invalid_argument on an empty trajectory or object list or an
  // out-of-range noise parameter.
  void validate() const;
};

struct GroundTruth {
  std::vector<TruthObject> objects;
  TruthLabels labels;          // obs_id -> object id (kClutter for clutter)
  std::vector<ObsId> obs_ids;  // row/column order of pair_matrix
  BinaryMatrix pair_matrix;    // 1 where two observations share an object
};

struct SimulatedScene {
  std::vector<CameraPose> poses;  // as recorded (position noise applied)
  std::vector<Detection2D> detections;  // detections[i] has obs_id i
  ObservationStore observations;
  GroundTruth truth;
};

// Deterministic for a given spec, including its seed.
SimulatedScene generate_scene(const SceneSpec& spec);

// Poses along a straight street in +x (heading 0) at the given camera height.
std::vector<CameraPose> straight_trajectory(double length, double spacing,
                                            double camera_height = 2.5);

struct CategoryProfile {
  std::string name;
  double height;    // physical height, meters
  double center_z;  // center height above ground, meters
};

const std::vector<CategoryProfile>& default_categories();

struct SceneLayout {
  double length = 200.0;
  double spacing = 10.0;
  int n_objects = 30;
  double lateral_min = 4.0;
  double lateral_max = 12.0;
  double min_separation = 3.0;
  double camera_height = 2.5;
};

// Random objects on both sides of the street, at least min_separation apart in plan view.
std::vector<TruthObject> random_objects(const SceneLayout& layout,
                                        std::uint64_t seed);

// The default desk-scale scene: 200 m street, 10 m spacing, 0.2 deg direction
// noise, 2 cm pose noise.
SceneSpec default_scene_spec(std::uint64_t seed, int n_objects = 30);

// Corrupts a fraction of the links: each selected link is either dropped or
// rewired to an observation of a different object of the same category in a
// different frame. Deterministic in seed.
std::vector<PairMatch> corrupt_links(const std::vector<PairMatch>& pairs,
                                     const ObservationStore& obs,
                                     const TruthLabels& labels, double fraction,
                                     std::uint64_t seed);

}  // namespace streetinv
