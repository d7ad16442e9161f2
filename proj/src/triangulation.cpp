#include "streetinv/triangulation.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace streetinv {

namespace {

Vec3 perpendicular_offset(const Vec3& c, const Ray& ray) {
  const Vec3 v = c - ray.origin;
  return v - v.dot(ray.direction) * ray.direction;
}

void require_rays(std::span<const Ray> rays) {
  if (rays.empty()) throw std::invalid_argument("empty ray set");
}

}  // namespace

double point_ray_distance(const Vec3& c, const Ray& ray) {
  return perpendicular_offset(c, ray).norm();
}

double energy(const Vec3& c, std::span<const Ray> rays) {
  require_rays(rays);
  double e = 0.0;
  for (const Ray& r : rays) e += perpendicular_offset(c, r).squaredNorm();
  return e;
}

Vec3 energy_gradient(const Vec3& c, std::span<const Ray> rays) {
  require_rays(rays);
  // The offset is (I - d d^T)(c - p) and the projector is idempotent.
  Vec3 g = Vec3::Zero();
  for (const Ray& r : rays) g += 2.0 * perpendicular_offset(c, r);
  return g;
}

std::optional<Vec2> xy_ray_intersection(const Ray& a, const Ray& b) {
  if (std::abs(a.direction.z()) > kNearVerticalDirZ ||
      std::abs(b.direction.z()) > kNearVerticalDirZ) {
    return std::nullopt;
  }
  const Vec2 da = a.direction.head<2>().normalized();
  const Vec2 db = b.direction.head<2>().normalized();
  const double cross = da.x() * db.y() - da.y() * db.x();
  if (std::abs(cross) < 1e-9) return std::nullopt;

  // pa + s*da = pb + t*db
  const Vec2 diff = b.origin.head<2>() - a.origin.head<2>();
  const double s = (diff.x() * db.y() - diff.y() * db.x()) / cross;
  return Vec2(a.origin.head<2>() + s * da);
}

std::optional<Vec3> init_center(std::span<const Ray> rays) {
  Vec2 xy_sum = Vec2::Zero();
  double z_sum = 0.0;
  int n_points = 0;
  int n_heights = 0;

  const auto height_at = [](const Ray& r, const Vec2& q) {
    const Vec2 dxy = r.direction.head<2>();
    const double t = (q - r.origin.head<2>()).dot(dxy) / dxy.squaredNorm();
    return r.origin.z() + t * r.direction.z();
  };

  for (std::size_t i = 0; i < rays.size(); ++i) {
    for (std::size_t j = i + 1; j < rays.size(); ++j) {
      const auto q = xy_ray_intersection(rays[i], rays[j]);
      if (!q) continue;
      xy_sum += *q;
      ++n_points;
      z_sum += height_at(rays[i], *q) + height_at(rays[j], *q);
      n_heights += 2;
    }
  }
  if (n_points == 0) return std::nullopt;
  const Vec2 xy = xy_sum / n_points;
  return Vec3(xy.x(), xy.y(), z_sum / n_heights);
}

std::optional<CenterEstimate> estimate_center(std::span<const Ray> rays,
                                              const BfgsOptions& options) {
  const auto start = init_center(rays);
  if (!start) return std::nullopt;

  CenterEstimate out;
  Vec3 x = *start;
  double fx = energy(x, rays);
  Vec3 g = energy_gradient(x, rays);
  out.initial_energy = fx;

  Mat3 inv_hessian = Mat3::Identity();
  bool scaled = false;
  int iter = 0;
  while (iter < options.max_iterations &&
         g.norm() >= options.gradient_tolerance) {
    Vec3 step = -inv_hessian * g;
    double slope = g.dot(step);
    if (slope >= 0.0) {
      // Lost descent; restart from steepest descent.
      inv_hessian.setIdentity();
      step = -g;
      slope = -g.squaredNorm();
    }

    double alpha = 1.0;
    Vec3 x_new = x + step;
    double f_new = energy(x_new, rays);
    int backtracks = 0;
    while (f_new > fx + options.armijo_slope * alpha * slope &&
           backtracks < options.max_backtracks) {
      alpha *= options.contraction;
      x_new = x + alpha * step;
      f_new = energy(x_new, rays);
      ++backtracks;
    }
    if (f_new > fx + options.armijo_slope * alpha * slope) break;  // stalled

    const Vec3 g_new = energy_gradient(x_new, rays);
    const Vec3 s = x_new - x;
    const Vec3 y = g_new - g;
    const double sy = s.dot(y);
    x = x_new;
    fx = f_new;
    g = g_new;
    ++iter;

    if (sy <= 1e-300) continue;  // curvature condition failed; keep H
    if (!scaled) {
      inv_hessian = Mat3::Identity() * (sy / y.squaredNorm());
      scaled = true;
    }
    const double rho = 1.0 / sy;
    const Mat3 v = Mat3::Identity() - rho * s * y.transpose();
    inv_hessian = v * inv_hessian * v.transpose() + rho * s * s.transpose();
  }

  // Energy differences drop below rounding before the gradient does, so the
  // line search can stall early. Finish with exact Newton steps on the gradient.
  Mat3 hessian = Mat3::Zero();
  for (const Ray& r : rays) {
    hessian += 2.0 * (Mat3::Identity() - r.direction * r.direction.transpose());
  }
  const Eigen::LDLT<Mat3> newton(hessian);
  if (newton.info() == Eigen::Success && newton.rcond() > 1e-12) {
    for (int k = 0; k < 3 && g.norm() >= options.gradient_tolerance; ++k) {
      const Vec3 x_new = x - newton.solve(g);
      const Vec3 g_new = energy_gradient(x_new, rays);
      if (!(g_new.norm() < g.norm())) break;
      x = x_new;
      g = g_new;
      fx = energy(x, rays);
    }
  }

  if (!x.allFinite()) {
    throw NumericalError("BFGS produced a non-finite center");
  }
  out.center = x;
  out.final_energy = fx;
  out.gradient_norm = g.norm();
  out.iterations = iter;
  out.converged = out.gradient_norm <= options.convergence_flag_tolerance;
  out.residuals.reserve(rays.size());
  for (const Ray& r : rays) out.residuals.push_back(point_ray_distance(x, r));
  return out;
}

}  // namespace streetinv
