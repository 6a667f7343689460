#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fieldcal/field_model.hpp"

namespace fieldcal {

/// Horizon guard for projection: |w| at or below this is "at infinity".
inline constexpr double kProjectEpsilon = 1e-9;
/// Image points whose back-projected w (sign-preserving, Frobenius-scaled
/// inverse) is at or below this lie on or above the horizon.
inline constexpr double kHorizonEpsilon = 1e-6;
inline constexpr double kDetTolerance = 1e-12;

/// Frobenius-normalizes m and makes m(2,2) non-negative when it is not
/// negligible. Idempotent bit-for-bit.
Eigen::Matrix3d normalize_matrix(const Eigen::Matrix3d& m);

/// Planar projective map from the field plane (meters) to the image
/// (pixels). Always stored normalized and non-degenerate.
class Homography {
 public:
  Homography() : Homography(Eigen::Matrix3d::Identity()) {}

  /// Normalizes m; throws NumericalError if it is singular or not finite.
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography identity() { return Homography(); }
  static std::optional<Homography> try_make(const Eigen::Matrix3d& m);

  const Eigen::Matrix3d& matrix() const { return h_; }
  double operator()(int r, int c) const { return h_(r, c); }

  /// Inverse map, normalized.
  Homography inverse() const;

  /// Inverse scaled by a positive factor only, so the sign of the third
  /// homogeneous coordinate still tells front from behind the camera.
  Eigen::Matrix3d signed_inverse() const;

  friend bool operator==(const Homography& a, const Homography& b) { return a.h_ == b.h_; }

 private:
  Eigen::Matrix3d h_;
};

struct ImageFrame {
  int width_px = 0;
  int height_px = 0;

  friend bool operator==(const ImageFrame&, const ImageFrame&) = default;
};

/// Convex, counter-clockwise polygon in field coordinates; may be empty.
struct VisiblePolygon {
  std::vector<Point2> vertices;

  bool empty() const { return vertices.size() < 3; }
  double area() const;
};

struct Correspondence {
  Point2 field;
  Point2 image;
};

std::optional<Point2> project(const Homography& h, const Point2& p);
std::optional<Point2> unproject(const Homography& h, const Point2& q);

/// Back-projects q only when it lies strictly below the horizon, i.e. its
/// ray hits the field plane in front of the camera.
std::optional<Point2> unproject_visible(const Homography& h, const Point2& q);

/// Normalized a*b; throws NumericalError for a degenerate product.
Homography compose(const Homography& a, const Homography& b);

/// Normalized DLT with Hartley conditioning. Throws std::invalid_argument
/// for fewer than 4 pairs and NumericalError for degenerate configurations.
Homography estimate_dlt(std::span<const Correspondence> pairs);

/// Portion of the field seen by the camera: the image rectangle clipped
/// below the horizon, back-projected, then clipped to the field rectangle.
VisiblePolygon visible_field_polygon(const Homography& h, const ImageFrame& frame,
                                     const FieldModel& field);

// Planar polygon helpers shared by the raster and evaluation code.
namespace poly {

/// Signed area, positive for counter-clockwise vertex order.
double signed_area(std::span<const Point2> p);

/// Keeps the part of `p` where a*x + b*y + c >= 0.
std::vector<Point2> clip_half_plane(std::span<const Point2> p, double a, double b, double c);

/// Intersection of `subject` with a convex counter-clockwise `clip`.
std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip);

/// Makes the vertex order counter-clockwise and drops repeated vertices.
std::vector<Point2> canonicalize(std::vector<Point2> p);

bool contains_convex(std::span<const Point2> ccw, const Point2& q);

}  // namespace poly

}  // namespace fieldcal
