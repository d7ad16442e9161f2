#pragma once

#include "streetinv/types.hpp"

namespace streetinv {

// WGS84 geodetic coordinates (radians, meters above the ellipsoid) to a local
// East-North-Up frame anchored at an origin point.
class LocalEnuFrame {
 public:
  static constexpr double kSemiMajor = 6378137.0;
  static constexpr double kFlattening = 1.0 / 298.257223563;

  LocalEnuFrame(double lat0, double lon0, double alt0);

  Vec3 forward(double lat, double lon, double alt) const;

  static Vec3 to_ecef(double lat, double lon, double alt);

 private:
  Vec3 origin_ecef_;
  Mat3 ecef_to_enu_;
};

}  // namespace streetinv
