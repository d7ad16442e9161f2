#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "streetinv/geometry.hpp"

using namespace streetinv;
using streetinv::testing::kPi;

namespace {

Detection2D det_at(double cx, double cy, double w = 8192, double h = 4096) {
  Detection2D d;
  d.frame_id = 7;
  d.center_x = cx;
  d.center_y = cy;
  d.box_w = 10;
  d.box_h = 20;
  d.image_w = w;
  d.image_h = h;
  d.category = "traffic_sign";
  return d;
}

CameraPose pose(double heading = 0, double pitch = 0, double roll = 0) {
  CameraPose p;
  p.frame_id = 7;
  p.position = Vec3(1, 2, 3);
  p.heading = heading;
  p.pitch = pitch;
  p.roll = roll;
  return p;
}

// Elementary rotation matrices written out by hand.
Mat3 rz(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}
Mat3 ry(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}
Mat3 rx(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}

// Inverse of the equirectangular mapping.
std::pair<double, double> dir_to_pixel(const Vec3& d, double w, double h) {
  const double az = std::atan2(d.y(), d.x());
  const double el = std::asin(d.z());
  return {(az + kPi) / (2 * kPi) * w, (1.0 - (el + kPi / 2) / kPi) * h};
}

}  // namespace

TEST(PixelToAngles, ImageCenterIsForward) {
  const auto a = pixel_to_angles(det_at(4096, 2048));
  EXPECT_NEAR(a.azimuth, 0.0, 1e-15);
  EXPECT_NEAR(a.elevation, 0.0, 1e-15);
}

TEST(PixelToAngles, ImageCornersHitTheRangeLimits) {
  const auto lo = pixel_to_angles(det_at(0, 4096));
  EXPECT_NEAR(lo.azimuth, -kPi, 1e-15);
  EXPECT_NEAR(lo.elevation, -kPi / 2, 1e-15);
  const auto hi = pixel_to_angles(det_at(8192, 0));
  EXPECT_NEAR(hi.azimuth, kPi, 1e-15);
  EXPECT_NEAR(hi.elevation, kPi / 2, 1e-15);
}

TEST(PixelToAngles, ZeroImageSizeThrows) {
  EXPECT_THROW(pixel_to_angles(det_at(1, 1, 0, 4096)), std::invalid_argument);
  EXPECT_THROW(pixel_to_angles(det_at(1, 1, 8192, 0)), std::invalid_argument);
}

TEST(PixelToAngles, Monotone) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double x = u(rng) * 8000, y = u(rng) * 4000, dx = 1e-3 + u(rng) * 50;
    EXPECT_LT(pixel_to_angles(det_at(x, y)).azimuth, pixel_to_angles(det_at(x + dx, y)).azimuth);
    EXPECT_GT(pixel_to_angles(det_at(x, y)).elevation,
              pixel_to_angles(det_at(x, y + dx)).elevation);
  }
}

TEST(PixelToAngles, RoundTripThroughInverse) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 d = Vec3(n(rng), n(rng), n(rng)).normalized();
    const auto [px, py] = dir_to_pixel(d, 8192, 4096);
    const auto a = pixel_to_angles(det_at(px, py));
    EXPECT_NEAR(a.azimuth, std::atan2(d.y(), d.x()), 1e-9);
    EXPECT_NEAR(a.elevation, std::asin(d.z()), 1e-9);
    EXPECT_LT((angles_to_camera_dir(a.azimuth, a.elevation) - d).norm(), 1e-9);
  }
}

TEST(AnglesToCameraDir, Axes) {
  EXPECT_LT((angles_to_camera_dir(0, 0) - Vec3::UnitX()).norm(), 1e-15);
  EXPECT_LT((angles_to_camera_dir(kPi / 2, 0) - Vec3::UnitY()).norm(), 1e-15);
  EXPECT_LT((angles_to_camera_dir(0, kPi / 2) - Vec3::UnitZ()).norm(), 1e-15);
}

TEST(RotationFromEuler, MatchesElementaryProduct) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> a(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const double h = a(rng), p = a(rng), r = a(rng);
    EXPECT_LT((rotation_from_euler(h, p, r) - rz(h) * ry(p) * rx(r)).norm(), 1e-12);
  }
}

TEST(RotationFromEuler, IsProperRotation) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> a(-10, 10);
  for (int i = 0; i < 200; ++i) {
    const Mat3 m = rotation_from_euler(a(rng), a(rng), a(rng));
    EXPECT_LT((m.transpose() * m - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(m.determinant(), 1.0, 1e-12);
  }
}

TEST(BuildObservation, IdentityPoseForward) {
  CameraPose p = pose();
  p.position = Vec3::Zero();
  const Observation o = build_observation(det_at(4096, 2048), p, 3);
  EXPECT_EQ(o.obs_id, 3);
  EXPECT_EQ(o.frame_id, 7);
  EXPECT_EQ(o.category, "traffic_sign");
  EXPECT_LT((o.direction - Vec3::UnitX()).norm(), 1e-12);
  EXPECT_EQ(o.exposure, Vec3::Zero());
  EXPECT_NEAR(o.box_w_norm, 10.0 / 8192, 1e-15);
  EXPECT_NEAR(o.box_h_norm, 20.0 / 4096, 1e-15);
}

TEST(BuildObservation, TopRowPointsUp) {
  const Observation o = build_observation(det_at(4096, 0), pose(), 0);
  EXPECT_LT((o.direction - Vec3::UnitZ()).norm(), 1e-12);
}

TEST(BuildObservation, HeadingQuarterTurn) {
  const Observation o = build_observation(det_at(4096, 2048), pose(kPi / 2), 0);
  EXPECT_LT((o.direction - rz(kPi / 2) * Vec3::UnitX()).norm(), 1e-12);
  EXPECT_LT((o.direction - Vec3::UnitY()).norm(), 1e-12);
  EXPECT_EQ(o.exposure, Vec3(1, 2, 3));
}

TEST(BuildObservation, UnitDirectionsForRandomInputs) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0, 1), a(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const Observation o =
        build_observation(det_at(u(rng) * 8192, u(rng) * 4096), pose(a(rng), a(rng), a(rng)), i);
    EXPECT_NEAR(o.direction.norm(), 1.0, 1e-9);
  }
}

TEST(BuildObservation, FrameMismatchThrows) {
  CameraPose p = pose();
  p.frame_id = 8;
  EXPECT_THROW(build_observation(det_at(1, 1), p, 0), DataError);
}

TEST(Validate, RejectsBadDetections) {
  Detection2D d = det_at(100, 100);
  EXPECT_NO_THROW(validate(d));
  d.center_x = 9000;
  EXPECT_THROW(validate(d), DataError);
  d = det_at(100, 100);
  d.box_w = 0;
  EXPECT_THROW(validate(d), DataError);
  d = det_at(100, 100);
  d.confidence = 1.5;
  EXPECT_THROW(validate(d), DataError);
  d = det_at(100, 100);
  d.category.clear();
  EXPECT_THROW(validate(d), DataError);
}

TEST(Validate, RejectsNonFinitePose) {
  CameraPose p = pose();
  EXPECT_NO_THROW(validate(p));
  p.heading = NAN;
  EXPECT_THROW(validate(p), DataError);
  p = pose();
  p.position.x() = INFINITY;
  EXPECT_THROW(validate(p), DataError);
}
