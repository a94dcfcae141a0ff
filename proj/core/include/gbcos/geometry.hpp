#pragma once

// Binary-classification decision boundaries on the 2-sphere.
//
// For target prototype P1 against P2 the signed residuals are
//   softmax     P.P1 - P.P2
//   CosFace     P.P1 - P.P2 - m
//   ArcFace     acos(P.P2) - acos(P.P1) - m
//   GB-CosFace  P.P1 - (p_v + m),  p_v = alpha p_vg + (1 - alpha)(P.P1 + P.P2)/2
// Residuals are positive inside the target's region and zero on its boundary.

#include <array>
#include <cstddef>
#include <vector>

#include "gbcos/margin_losses.hpp"
#include "gbcos/sphere.hpp"

namespace gbcos {

using Vec3 = std::array<double, 3>;

enum class TargetPrototype { First, Second };

struct BoundarySpec {
  UnitVector p1;
  UnitVector p2;
  Variant variant = Variant::GBCosFace;
  double m = 0.15;
  double alpha = 1.0;
  double p_vg = 0.62;
  std::size_t grid_resolution = 256;
  TargetPrototype target = TargetPrototype::First;

  /// Two unit vectors in the xz-plane separated by `angle_rad`, symmetric about +z.
  static BoundarySpec with_angle(double angle_rad);

  double prototype_angle() const;
};

struct GridPoint {
  Vec3 xyz;
  double lat_deg;
  double lon_deg;
  double residual;
};

struct BoundaryVertex {
  Vec3 xyz;
  double lat_deg;
  double lon_deg;
  double residual;          ///< residual at the refined vertex
  double cell_variation;    ///< |residual difference| across the crossing edge
};

struct BoundaryMap {
  std::vector<GridPoint> points;
  std::vector<BoundaryVertex> boundary_polyline;  ///< nearest-neighbour chained
};

/// Throws DimensionMismatch unless p and the prototypes are 3-D.
double boundary_residual(const UnitVector& p, const BoundarySpec& spec);
double boundary_residual(const Vec3& p, const BoundarySpec& spec);

/// Marches the latitude/longitude grid (poles along P1 + P2) and returns the
/// residual field plus its zero crossings. Throws DegenerateSpec if P1 = +-P2
/// and InvalidArgument when grid_resolution < 32.
BoundaryMap trace_boundary(const BoundarySpec& spec);

/// Symmetric Hausdorff distance in radians between two polylines' vertices.
double hausdorff_angle(const std::vector<BoundaryVertex>& a, const std::vector<BoundaryVertex>& b);

}  // namespace gbcos
