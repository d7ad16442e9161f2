#pragma once

#include <optional>
#include <span>
#include <vector>

#include "streetinv/geometry.hpp"

namespace streetinv {

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();  // unit length
};

inline Ray ray_of(const Observation& obs) { return {obs.exposure, obs.direction}; }

// Perpendicular distance from c to the infinite line through the ray.
double point_ray_distance(const Vec3& c, const Ray& ray);

// Sum of squared point-to-line distances. Throws std::invalid_argument when
// rays is empty.
double energy(const Vec3& c, std::span<const Ray> rays);
Vec3 energy_gradient(const Vec3& c, std::span<const Ray> rays);

// Rays with |direction.z| above this are treated as vertical in the XY plane.
inline constexpr double kNearVerticalDirZ = 0.999;

// Intersection of the two rays' XY projections taken as infinite lines.
// Absent for parallel projections or near-vertical rays.
std::optional<Vec2> xy_ray_intersection(const Ray& a, const Ray& b);

// XY from the mean of all pairwise XY intersections; Z from the mean height of
// the rays at the points whose XY projection is nearest each intersection.
// Absent when no pair yields an intersection (degenerate cluster).
std::optional<Vec3> init_center(std::span<const Ray> rays);

struct BfgsOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 200;
  // Above this gradient norm at termination the result is flagged.
  double convergence_flag_tolerance = 1e-4;
  double armijo_slope = 1e-4;
  double contraction = 0.5;
  int max_backtracks = 60;
};

struct CenterEstimate {
  Vec3 center = Vec3::Zero();
  std::vector<double> residuals;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = true;
};

// BFGS minimization of energy() started from init_center(). Absent when the
// ray set is degenerate; a result with converged == false is still usable.
std::optional<CenterEstimate> estimate_center(std::span<const Ray> rays,
                                              const BfgsOptions& options = {});

}  // namespace streetinv
