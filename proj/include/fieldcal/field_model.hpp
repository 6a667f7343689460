#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fieldcal {

using Point2 = Eigen::Vector2d;

// Marking dimensions (meters), IFAB recommended pitch.
inline constexpr double kFieldLength = 105.0;
inline constexpr double kFieldWidth = 68.0;
inline constexpr double kCenterCircleRadius = 9.15;
inline constexpr double kPenaltyAreaDepth = 16.5;
inline constexpr double kPenaltyAreaWidth = 40.32;
inline constexpr double kGoalAreaDepth = 5.5;
inline constexpr double kGoalAreaWidth = 18.32;
inline constexpr double kPenaltySpotDistance = 11.0;
inline constexpr double kCornerArcRadius = 1.0;
inline constexpr double kMarkingWidth = 0.12;
inline constexpr int kZoneCount = 16;

struct MarkingPrimitive {
  enum class Kind { kSegment, kArc };

  Kind kind = Kind::kSegment;
  // Segment endpoints.
  Point2 a = Point2::Zero();
  Point2 b = Point2::Zero();
  // Arc parameters; angles in radians, counter-clockwise from +x,
  // angle_end > angle_begin.
  Point2 center = Point2::Zero();
  double radius = 0.0;
  double angle_begin = 0.0;
  double angle_end = 0.0;
  double width_m = kMarkingWidth;

  static MarkingPrimitive segment(Point2 a, Point2 b);
  static MarkingPrimitive arc(Point2 center, double radius, double begin, double end);

  /// Point at parameter t in [0, 1] along the primitive.
  Point2 point_at(double t) const;
  double length() const;
};

struct Zone {
  int id = 0;
  std::string name;
  /// Simple closed polygon (arcs discretized), counter-clockwise, last
  /// vertex not repeated.
  std::vector<Point2> boundary;
  /// Raster label, id + 1 (0 is reserved for non-field pixels).
  std::uint8_t label_color = 0;
};

/// Axis-aligned rectangle in field coordinates.
struct FieldRect {
  double x_min, y_min, x_max, y_max;

  double area() const { return (x_max - x_min) * (y_max - y_min); }
  bool contains(const Point2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
  std::array<Point2, 4> corners_ccw() const {
    return {Point2(x_min, y_min), Point2(x_max, y_min), Point2(x_max, y_max),
            Point2(x_min, y_max)};
  }
};

/// Canonical soccer pitch. Origin at the center spot, x along the length,
/// y along the width.
///
/// Zone enumeration (ids are stable and used as raster labels minus one):
///   0/1   left/right goal area
///   2/3   left/right penalty area minus goal area
///   4/5   left/right penalty arc (the "D")
///   6/7   left/right center-circle half
///   8/9   left wing strip y >= +20.16 / y <= -20.16, x <= 0
///   10/11 left middle band, upper (y >= 0) / lower (y <= 0)
///   12-15 the right-half mirrors of 8-11
/// A point on a shared boundary belongs to the zone with the smaller id.
class FieldModel {
 public:
  FieldModel() = default;
  FieldModel(double length_m, double width_m, std::vector<MarkingPrimitive> markings,
             std::vector<Zone> zones);

  double length_m() const { return length_; }
  double width_m() const { return width_; }
  const std::vector<MarkingPrimitive>& markings() const { return markings_; }
  const std::vector<Zone>& zones() const { return zones_; }
  int zone_count() const { return static_cast<int>(zones_.size()); }
  FieldRect boundary() const {
    return {-length_ / 2, -width_ / 2, length_ / 2, width_ / 2};
  }

  /// Zone containing p, or nullopt when p is outside the field rectangle.
  std::optional<int> zone_at(const Point2& p) const;

 private:
  double length_ = kFieldLength;
  double width_ = kFieldWidth;
  std::vector<MarkingPrimitive> markings_;
  std::vector<Zone> zones_;
};

FieldModel standard_field();

/// Zone id of the mirror image under x -> -x (mirror_x) or y -> -y.
int mirror_zone_id(int id, bool mirror_x, bool mirror_y);

/// Exact zone areas (m^2) of the standard field, indexed by id.
std::array<double, kZoneCount> standard_zone_areas();

}  // namespace fieldcal
