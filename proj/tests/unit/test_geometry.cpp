#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "expect_error.hpp"
#include "generators.hpp"

#include "gbcos/geometry.hpp"

using namespace gbcos;
using gbcos::testing::Gen;

namespace {

constexpr double kPi = std::numbers::pi;

BoundarySpec sixty_degree_spec(Variant v, double m, double alpha = 1.0) {
  BoundarySpec spec = BoundarySpec::with_angle(kPi / 3.0);
  spec.variant = v;
  spec.m = m;
  spec.alpha = alpha;
  spec.p_vg = 0.62;
  return spec;
}

Vec3 random_point(Gen& g) {
  const UnitVector u = g.unit(3);
  return {u[0], u[1], u[2]};
}

double dot3(const Vec3& a, std::span<const double> b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

}  // namespace

TEST(BoundarySpec, WithAngleIsSymmetricAboutZ) {
  const BoundarySpec spec = BoundarySpec::with_angle(kPi / 3.0);
  EXPECT_NEAR(spec.prototype_angle(), kPi / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(spec.p1[0], -spec.p2[0]);
  EXPECT_EQ(spec.p1[2], spec.p2[2]);
  EXPECT_EQ(spec.p1[1], 0.0);
}

TEST(BoundaryResidual, SoftmaxVanishesOnBisector) {
  Gen g(401);
  const BoundarySpec spec = sixty_degree_spec(Variant::NormalizedSoftmax, 0.0);
  for (int trial = 0; trial < 1000; ++trial) {
    // The bisecting great circle of the default pair is the plane x = 0.
    const double t = g.uniform(0.0, 2.0 * kPi);
    EXPECT_NEAR(boundary_residual(Vec3{0.0, std::cos(t), std::sin(t)}, spec), 0.0, 1e-15);
  }
}

TEST(BoundaryResidual, GbAlphaOneIsCircleAroundTarget) {
  Gen g(402);
  const BoundarySpec spec = sixty_degree_spec(Variant::GBCosFace, 0.15, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec3 p = random_point(g);
    EXPECT_NEAR(boundary_residual(p, spec), dot3(p, spec.p1.coords()) - 0.77, 1e-15);
  }
}

TEST(BoundaryResidual, GbAlphaZeroHasCosFaceDoubleMarginSigns) {
  const BoundarySpec gb = sixty_degree_spec(Variant::GBCosFace, 0.15, 0.0);
  const BoundarySpec cos = sixty_degree_spec(Variant::CosFace, 0.3);
  std::size_t compared = 0;
  for (int i = 0; i < 200; ++i) {
    const double lat = -0.5 * kPi + (i + 0.5) * kPi / 200.0;
    for (int j = 0; j < 400; ++j) {
      const double lon = j * 2.0 * kPi / 400.0;
      const Vec3 p{std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
      const double r_cos = boundary_residual(p, cos);
      if (std::abs(r_cos) < 1e-12) continue;
      EXPECT_EQ(boundary_residual(p, gb) > 0.0, r_cos > 0.0);
      ++compared;
    }
  }
  EXPECT_GT(compared, 79000u);
}

TEST(BoundaryResidual, SwappingPrototypesAndRolesIsSymmetric) {
  Gen g(403);
  for (Variant v : {Variant::NormalizedSoftmax, Variant::CosFace, Variant::ArcFace, Variant::GBCosFace}) {
    BoundarySpec first = sixty_degree_spec(v, v == Variant::NormalizedSoftmax ? 0.0 : 0.15, 0.4);
    BoundarySpec second = first;
    second.target = TargetPrototype::Second;
    for (int trial = 0; trial < 500; ++trial) {
      const Vec3 p = random_point(g);
      const Vec3 mirrored{-p[0], p[1], p[2]};
      EXPECT_NEAR(boundary_residual(p, first), boundary_residual(mirrored, second), 1e-14) << to_string(v);
    }
  }
}

TEST(BoundaryResidual, RequiresThreeDimensions) {
  const BoundarySpec spec = sixty_degree_spec(Variant::CosFace, 0.3);
  EXPECT_GBCOS_ERROR(boundary_residual(normalize(std::vector<double>{1.0, 0.0}), spec), ErrorCode::DimensionMismatch);
}

TEST(TraceBoundary, AlphaOneCircle) {
  const BoundaryMap map = trace_boundary(sixty_degree_spec(Variant::GBCosFace, 0.15, 1.0));
  const BoundarySpec spec = sixty_degree_spec(Variant::GBCosFace, 0.15, 1.0);
  ASSERT_FALSE(map.boundary_polyline.empty());
  for (const auto& v : map.boundary_polyline) {
    EXPECT_LT(std::abs(dot3(v.xyz, spec.p1.coords()) - 0.77), 1e-3);
    EXPECT_NEAR(std::acos(dot3(v.xyz, spec.p1.coords())), std::acos(0.77), 2e-3);
  }
}

TEST(TraceBoundary, SoftmaxOnBisector) {
  const BoundaryMap map = trace_boundary(sixty_degree_spec(Variant::NormalizedSoftmax, 0.0));
  ASSERT_FALSE(map.boundary_polyline.empty());
  for (const auto& v : map.boundary_polyline) EXPECT_LT(std::abs(v.xyz[0]), 1e-3);
}

TEST(TraceBoundary, GbAlphaZeroMatchesCosFaceDoubleMargin) {
  BoundarySpec gb = sixty_degree_spec(Variant::GBCosFace, 0.15, 0.0);
  BoundarySpec cos = sixty_degree_spec(Variant::CosFace, 0.3);
  const BoundaryMap a = trace_boundary(gb), b = trace_boundary(cos);
  ASSERT_FALSE(a.boundary_polyline.empty());
  EXPECT_LT(hausdorff_angle(a.boundary_polyline, b.boundary_polyline), kPi / 256.0);
}

TEST(TraceBoundary, PointsAreUnitAndVerticesNearZero) {
  for (Variant v : {Variant::NormalizedSoftmax, Variant::CosFace, Variant::ArcFace, Variant::GBCosFace}) {
    BoundarySpec spec = sixty_degree_spec(v, v == Variant::NormalizedSoftmax ? 0.0 : 0.3, 0.5);
    spec.grid_resolution = 96;
    const BoundaryMap map = trace_boundary(spec);
    EXPECT_EQ(map.points.size(), 96u * 96u);
    for (const auto& p : map.points) {
      EXPECT_NEAR(std::sqrt(p.xyz[0] * p.xyz[0] + p.xyz[1] * p.xyz[1] + p.xyz[2] * p.xyz[2]), 1.0, 1e-12);
    }
    ASSERT_FALSE(map.boundary_polyline.empty()) << to_string(v);
    for (const auto& vert : map.boundary_polyline) {
      EXPECT_LT(std::abs(vert.residual), 2.0 * vert.cell_variation) << to_string(v);
      EXPECT_NEAR(boundary_residual(vert.xyz, spec), vert.residual, 1e-15);
    }
  }
}

TEST(TraceBoundary, DeformsContinuouslyInAlpha) {
  // Displacement shrinks with the alpha step down to the grid's own resolution.
  for (double step : {0.1, 0.03, 0.01}) {
    for (double alpha = 0.0; alpha + step <= 1.0 + 1e-12; alpha += 0.2) {
      const auto a = trace_boundary(sixty_degree_spec(Variant::GBCosFace, 0.15, alpha)).boundary_polyline;
      const auto b = trace_boundary(sixty_degree_spec(Variant::GBCosFace, 0.15, alpha + step)).boundary_polyline;
      EXPECT_LT(hausdorff_angle(a, b), 4.0 * step + kPi / 128.0) << "alpha " << alpha << " step " << step;
    }
  }
}

TEST(TraceBoundary, Errors) {
  BoundarySpec same = sixty_degree_spec(Variant::CosFace, 0.3);
  same.p2 = same.p1;
  EXPECT_GBCOS_ERROR(trace_boundary(same), ErrorCode::DegenerateSpec);
  BoundarySpec opposite = sixty_degree_spec(Variant::CosFace, 0.3);
  opposite.p2 = normalize(std::vector<double>{-opposite.p1[0], -opposite.p1[1], -opposite.p1[2]});
  EXPECT_GBCOS_ERROR(trace_boundary(opposite), ErrorCode::DegenerateSpec);
  BoundarySpec coarse = sixty_degree_spec(Variant::CosFace, 0.3);
  coarse.grid_resolution = 31;
  EXPECT_GBCOS_ERROR(trace_boundary(coarse), ErrorCode::InvalidArgument);
}

TEST(HausdorffAngle, IdenticalAndEmpty) {
  const auto line = trace_boundary(sixty_degree_spec(Variant::CosFace, 0.3)).boundary_polyline;
  EXPECT_LT(hausdorff_angle(line, line), 1e-7);
  EXPECT_TRUE(std::isinf(hausdorff_angle(line, {})));
}
