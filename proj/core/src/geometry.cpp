#include "gbcos/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gbcos/error.hpp"

namespace gbcos {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;
constexpr int kBisectionSteps = 5;

Vec3 to_vec3(const UnitVector& u) {
  if (u.dim() != 3) throw Error(ErrorCode::DimensionMismatch, "boundary geometry is 3-D");
  return {u[0], u[1], u[2]};
}

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 unit3(const Vec3& v) {
  const double n = std::sqrt(dot3(v, v));
  return {v[0] / n, v[1] / n, v[2] / n};
}

// Orthonormal frame with +z along (P1 + P2) and P1 in the xz half-plane.
struct Frame {
  Vec3 x, y, z;

  Vec3 point(double lat, double lon) const {
    const double cl = std::cos(lat), sl = std::sin(lat);
    const double cx = cl * std::cos(lon), cy = cl * std::sin(lon);
    return {cx * x[0] + cy * y[0] + sl * z[0], cx * x[1] + cy * y[1] + sl * z[1],
            cx * x[2] + cy * y[2] + sl * z[2]};
  }
};

Frame make_frame(const Vec3& p1, const Vec3& p2) {
  Frame f;
  f.z = unit3({p1[0] + p2[0], p1[1] + p2[1], p1[2] + p2[2]});
  const double along = dot3(p1, f.z);
  f.x = unit3({p1[0] - along * f.z[0], p1[1] - along * f.z[1], p1[2] - along * f.z[2]});
  f.y = cross3(f.z, f.x);
  return f;
}

void require_nondegenerate(const Vec3& p1, const Vec3& p2) {
  if (std::abs(dot3(p1, p2)) >= 1.0 - 1e-12) {
    throw Error(ErrorCode::DegenerateSpec, "prototypes coincide or are antipodal");
  }
}

}  // namespace

BoundarySpec BoundarySpec::with_angle(double angle_rad) {
  const double h = 0.5 * angle_rad;
  const std::array<double, 3> a{std::sin(h), 0.0, std::cos(h)};
  const std::array<double, 3> b{-std::sin(h), 0.0, std::cos(h)};
  return BoundarySpec{normalize(a), normalize(b)};
}

double BoundarySpec::prototype_angle() const { return angle_between(p1, p2); }

double boundary_residual(const Vec3& p, const BoundarySpec& spec) {
  Vec3 target = to_vec3(spec.p1);
  Vec3 other = to_vec3(spec.p2);
  if (spec.target == TargetPrototype::Second) std::swap(target, other);

  const double c_t = clamp_cosine(dot3(p, target));
  const double c_o = clamp_cosine(dot3(p, other));
  switch (spec.variant) {
    case Variant::NormalizedSoftmax:
      return c_t - c_o;
    case Variant::CosFace:
      return c_t - c_o - spec.m;
    case Variant::ArcFace:
      return std::acos(c_o) - std::acos(c_t) - spec.m;
    case Variant::GBCosFace: {
      const double p_v = spec.alpha * spec.p_vg + (1.0 - spec.alpha) * 0.5 * (c_t + c_o);
      return c_t - (p_v + spec.m);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double boundary_residual(const UnitVector& p, const BoundarySpec& spec) {
  return boundary_residual(to_vec3(p), spec);
}

BoundaryMap trace_boundary(const BoundarySpec& spec) {
  const Vec3 p1 = to_vec3(spec.p1);
  const Vec3 p2 = to_vec3(spec.p2);
  require_nondegenerate(p1, p2);
  if (spec.grid_resolution < 32) throw Error(ErrorCode::InvalidArgument, "grid_resolution must be >= 32");

  const std::size_t res = spec.grid_resolution;
  const double dlat = std::numbers::pi / static_cast<double>(res);
  const double dlon = 2.0 * std::numbers::pi / static_cast<double>(res);
  const Frame frame = make_frame(p1, p2);

  auto lat_of = [&](std::size_t i) { return -0.5 * std::numbers::pi + (static_cast<double>(i) + 0.5) * dlat; };
  auto lon_of = [&](std::size_t j) { return static_cast<double>(j) * dlon; };

  BoundaryMap map;
  map.points.reserve(res * res);
  for (std::size_t i = 0; i < res; ++i) {
    for (std::size_t j = 0; j < res; ++j) {
      const double lat = lat_of(i), lon = lon_of(j);
      const Vec3 p = frame.point(lat, lon);
      map.points.push_back({p, lat * kDeg, lon * kDeg, boundary_residual(p, spec)});
    }
  }

  auto residual_at = [&](std::size_t i, std::size_t j) { return map.points[i * res + j].residual; };

  // Root along the straight (lat, lon) path between two grid nodes.
  auto refine = [&](double lat_a, double lon_a, double lat_b, double lon_b, double r_a, double r_b) {
    double t0 = 0.0, t1 = 1.0, f0 = r_a, f1 = r_b;
    auto eval = [&](double t) {
      return boundary_residual(frame.point(lat_a + t * (lat_b - lat_a), lon_a + t * (lon_b - lon_a)), spec);
    };
    for (int k = 0; k < kBisectionSteps; ++k) {
      const double tm = 0.5 * (t0 + t1);
      const double fm = eval(tm);
      if ((fm < 0.0) == (f0 < 0.0)) {
        t0 = tm;
        f0 = fm;
      } else {
        t1 = tm;
        f1 = fm;
      }
    }
    const double t = (f0 == f1) ? 0.5 * (t0 + t1) : t0 + (t1 - t0) * f0 / (f0 - f1);
    const double lat = lat_a + t * (lat_b - lat_a);
    double lon = lon_a + t * (lon_b - lon_a);
    if (lon >= 2.0 * std::numbers::pi) lon -= 2.0 * std::numbers::pi;
    const Vec3 p = frame.point(lat, lon);
    return BoundaryVertex{p, lat * kDeg, lon * kDeg, boundary_residual(p, spec), std::abs(r_a - r_b)};
  };

  std::vector<BoundaryVertex> crossings;
  for (std::size_t i = 0; i < res; ++i) {
    for (std::size_t j = 0; j < res; ++j) {
      const double r = residual_at(i, j);
      const std::size_t jn = (j + 1) % res;
      const double r_lon = residual_at(i, jn);
      if ((r < 0.0) != (r_lon < 0.0)) {
        crossings.push_back(refine(lat_of(i), lon_of(j), lat_of(i), lon_of(j) + dlon, r, r_lon));
      }
      if (i + 1 < res) {
        const double r_lat = residual_at(i + 1, j);
        if ((r < 0.0) != (r_lat < 0.0)) {
          crossings.push_back(refine(lat_of(i), lon_of(j), lat_of(i + 1), lon_of(j), r, r_lat));
        }
      }
    }
  }

  // Greedy nearest-neighbour chaining.
  if (!crossings.empty()) {
    std::vector<bool> used(crossings.size(), false);
    std::size_t current = 0;
    used[0] = true;
    map.boundary_polyline.push_back(crossings[0]);
    for (std::size_t step = 1; step < crossings.size(); ++step) {
      std::size_t best = crossings.size();
      double best_dot = -2.0;
      for (std::size_t k = 0; k < crossings.size(); ++k) {
        if (used[k]) continue;
        const double d = dot3(crossings[current].xyz, crossings[k].xyz);
        if (d > best_dot) {
          best_dot = d;
          best = k;
        }
      }
      used[best] = true;
      current = best;
      map.boundary_polyline.push_back(crossings[best]);
    }
  }
  return map;
}

double hausdorff_angle(const std::vector<BoundaryVertex>& a, const std::vector<BoundaryVertex>& b) {
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  auto directed = [](const std::vector<BoundaryVertex>& from, const std::vector<BoundaryVertex>& to) {
    double worst = 0.0;
    for (const auto& u : from) {
      double best = -2.0;
      for (const auto& v : to) best = std::max(best, dot3(u.xyz, v.xyz));
      worst = std::max(worst, std::acos(clamp_cosine(best)));
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace gbcos
