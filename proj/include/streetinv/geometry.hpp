#pragma once

#include <string>

#include "streetinv/types.hpp"

namespace streetinv {

// Exposure position and orientation of one panoramic frame. Position is in a
// local East-North-Up metric frame; angles are radians.
struct CameraPose {
  FrameId frame_id = 0;
  Vec3 position = Vec3::Zero();
  double heading = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

// One 2D detection on an equirectangular panorama. Center and box are pixels.
struct Detection2D {
  FrameId frame_id = 0;
  double center_x = 0.0;
  double center_y = 0.0;
  double box_w = 0.0;
  double box_h = 0.0;
  double image_w = 0.0;
  double image_h = 0.0;
  std::string category;
  double confidence = 1.0;
};

// A detection lifted to a world-space ray.
struct Observation {
  ObsId obs_id = 0;
  FrameId frame_id = 0;
  std::string category;
  Vec3 exposure = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();
  double box_w_norm = 0.0;
  double box_h_norm = 0.0;
};

struct ViewAngles {
  double azimuth = 0.0;
  double elevation = 0.0;
};

// Throws DataError when the pose or detection violates its invariants.
void validate(const CameraPose& pose);
void validate(const Detection2D& det);

// Equirectangular pixel -> (azimuth in [-pi, pi], elevation in [-pi/2, pi/2]).
// Throws std::invalid_argument on zero image dimensions.
ViewAngles pixel_to_angles(const Detection2D& det);

// Camera frame is x forward, y left, z up.
Vec3 angles_to_camera_dir(double azimuth, double elevation);

// Rz(heading) * Ry(pitch) * Rx(roll); right-handed, counterclockwise positive.
Mat3 rotation_from_euler(double heading, double pitch, double roll);

// Throws DataError when the detection and pose belong to different frames.
Observation build_observation(const Detection2D& det, const CameraPose& pose,
                              ObsId obs_id);

}  // namespace streetinv
