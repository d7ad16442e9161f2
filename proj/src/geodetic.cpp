#include "streetinv/geodetic.hpp"

#include <cmath>

namespace streetinv {

LocalEnuFrame::LocalEnuFrame(double lat0, double lon0, double alt0)
    : origin_ecef_(to_ecef(lat0, lon0, alt0)) {
  const double sl = std::sin(lat0), cl = std::cos(lat0);
  const double so = std::sin(lon0), co = std::cos(lon0);
  ecef_to_enu_ << -so, co, 0.0,
                  -sl * co, -sl * so, cl,
                  cl * co, cl * so, sl;
}

Vec3 LocalEnuFrame::to_ecef(double lat, double lon, double alt) {
  const double e2 = kFlattening * (2.0 - kFlattening);
  const double sl = std::sin(lat);
  const double n = kSemiMajor / std::sqrt(1.0 - e2 * sl * sl);
  return {(n + alt) * std::cos(lat) * std::cos(lon),
          (n + alt) * std::cos(lat) * std::sin(lon),
          (n * (1.0 - e2) + alt) * sl};
}

Vec3 LocalEnuFrame::forward(double lat, double lon, double alt) const {
  return ecef_to_enu_ * (to_ecef(lat, lon, alt) - origin_ecef_);
}

}  // namespace streetinv
