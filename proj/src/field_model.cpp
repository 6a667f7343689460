#include "fieldcal/field_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fieldcal {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kArcSteps = 48;

// Half-angle subtended by the penalty arc at the penalty spot.
double penalty_arc_half_angle() {
  const double d = kPenaltyAreaDepth - kPenaltySpotDistance;
  return std::acos(d / kCenterCircleRadius);
}

void append_arc(std::vector<Point2>& out, const Point2& c, double r, double a0, double a1,
                bool include_first) {
  for (int i = include_first ? 0 : 1; i <= kArcSteps; ++i) {
    const double a = a0 + (a1 - a0) * i / kArcSteps;
    out.emplace_back(c.x() + r * std::cos(a), c.y() + r * std::sin(a));
  }
}

std::vector<Point2> mirrored(const std::vector<Point2>& poly, bool mx, bool my) {
  std::vector<Point2> out;
  out.reserve(poly.size());
  for (const auto& p : poly) out.emplace_back(mx ? -p.x() : p.x(), my ? -p.y() : p.y());
  // A single reflection flips orientation.
  if (mx != my) std::reverse(out.begin(), out.end());
  return out;
}

// Left-half zone polygons; the right half is their x-mirror.
std::vector<Point2> left_zone_polygon(int local, double half_len, double half_wid) {
  const double ga_x = -half_len + kGoalAreaDepth;
  const double ga_y = kGoalAreaWidth / 2;
  const double pa_x = -half_len + kPenaltyAreaDepth;
  const double pa_y = kPenaltyAreaWidth / 2;
  const double r = kCenterCircleRadius;
  const Point2 spot(-half_len + kPenaltySpotDistance, 0.0);
  const double theta = penalty_arc_half_angle();
  const double arc_y = r * std::sin(theta);

  std::vector<Point2> p;
  switch (local) {
    case 0:  // goal area
      p = {{-half_len, -ga_y}, {ga_x, -ga_y}, {ga_x, ga_y}, {-half_len, ga_y}};
      break;
    case 1:  // penalty area minus goal area
      p = {{-half_len, -pa_y}, {pa_x, -pa_y}, {pa_x, pa_y}, {-half_len, pa_y},
           {-half_len, ga_y},  {ga_x, ga_y},  {ga_x, -ga_y}, {-half_len, -ga_y}};
      break;
    case 2:  // penalty arc
      append_arc(p, spot, r, -theta, theta, true);
      break;
    case 3:  // center-circle half
      p = {{0.0, -r}};
      append_arc(p, Point2::Zero(), r, kPi / 2, 3 * kPi / 2, true);
      p.pop_back();
      break;
    case 4:  // upper wing strip
      p = {{-half_len, pa_y}, {0.0, pa_y}, {0.0, half_wid}, {-half_len, half_wid}};
      break;
    case 5:  // lower wing strip
      p = {{-half_len, -half_wid}, {0.0, -half_wid}, {0.0, -pa_y}, {-half_len, -pa_y}};
      break;
    case 6:  // middle band, upper
      p = {{spot.x() + r, 0.0}};
      append_arc(p, Point2::Zero(), r, kPi, kPi / 2, true);
      p.emplace_back(0.0, pa_y);
      p.emplace_back(pa_x, pa_y);
      p.emplace_back(pa_x, arc_y);
      append_arc(p, spot, r, theta, 0.0, false);
      p.pop_back();  // closes on the first vertex
      break;
    case 7:  // middle band, lower
      return mirrored(left_zone_polygon(6, half_len, half_wid), false, true);
    default:
      throw std::logic_error("zone index");
  }
  return p;
}

}  // namespace

MarkingPrimitive MarkingPrimitive::segment(Point2 a, Point2 b) {
  MarkingPrimitive m;
  m.kind = Kind::kSegment;
  m.a = a;
  m.b = b;
  return m;
}

MarkingPrimitive MarkingPrimitive::arc(Point2 center, double radius, double begin,
                                       double end) {
  MarkingPrimitive m;
  m.kind = Kind::kArc;
  m.center = center;
  m.radius = radius;
  m.angle_begin = begin;
  m.angle_end = end;
  return m;
}

Point2 MarkingPrimitive::point_at(double t) const {
  if (kind == Kind::kSegment) return a + t * (b - a);
  const double ang = angle_begin + t * (angle_end - angle_begin);
  return center + radius * Point2(std::cos(ang), std::sin(ang));
}

double MarkingPrimitive::length() const {
  if (kind == Kind::kSegment) return (b - a).norm();
  return radius * (angle_end - angle_begin);
}

FieldModel::FieldModel(double length_m, double width_m, std::vector<MarkingPrimitive> markings,
                       std::vector<Zone> zones)
    : length_(length_m), width_(width_m), markings_(std::move(markings)),
      zones_(std::move(zones)) {
  if (!(length_ > 0) || !(width_ > 0)) throw std::invalid_argument("field dimensions");
  for (const auto& m : markings_) {
    if (m.kind == MarkingPrimitive::Kind::kSegment && m.a == m.b)
      throw std::invalid_argument("degenerate marking segment");
    if (m.kind == MarkingPrimitive::Kind::kArc &&
        (!(m.radius > 0) || !(m.angle_end > m.angle_begin)))
      throw std::invalid_argument("degenerate marking arc");
  }
  for (std::size_t i = 0; i < zones_.size(); ++i)
    if (zones_[i].id != static_cast<int>(i)) throw std::invalid_argument("zone ids not dense");
}

std::optional<int> FieldModel::zone_at(const Point2& p) const {
  const double hl = length_ / 2;
  const double hw = width_ / 2;
  const double x = p.x();
  const double y = p.y();
  if (!(std::abs(x) <= hl) || !(std::abs(y) <= hw)) return std::nullopt;

  const double ga_x = hl - kGoalAreaDepth;
  const double ga_y = kGoalAreaWidth / 2;
  const double pa_x = hl - kPenaltyAreaDepth;
  const double pa_y = kPenaltyAreaWidth / 2;
  const double spot_x = hl - kPenaltySpotDistance;
  const double r2 = kCenterCircleRadius * kCenterCircleRadius;
  const double ay = std::abs(y);

  // Ids are tested in increasing order over closed sets, which implements
  // the smaller-id tie-break on shared boundaries.
  if (x <= -ga_x && ay <= ga_y) return 0;
  if (x >= ga_x && ay <= ga_y) return 1;
  if (x <= -pa_x && ay <= pa_y) return 2;
  if (x >= pa_x && ay <= pa_y) return 3;
  const double dl = x + spot_x;
  const double dr = x - spot_x;
  if (x >= -pa_x && dl * dl + y * y <= r2) return 4;
  if (x <= pa_x && dr * dr + y * y <= r2) return 5;
  const bool in_circle = x * x + y * y <= r2;
  if (in_circle && x <= 0) return 6;
  if (in_circle && x >= 0) return 7;
  if (x <= 0) {
    if (y >= pa_y) return 8;
    if (y <= -pa_y) return 9;
    return y >= 0 ? 10 : 11;
  }
  if (y >= pa_y) return 12;
  if (y <= -pa_y) return 13;
  return y >= 0 ? 14 : 15;
}

int mirror_zone_id(int id, bool mirror_x, bool mirror_y) {
  if (id < 0 || id >= kZoneCount) throw std::out_of_range("zone id");
  if (mirror_x) {
    if (id < 8) {
      id ^= 1;
    } else {
      id = id < 12 ? id + 4 : id - 4;
    }
  }
  if (mirror_y && id >= 8) id ^= 1;
  return id;
}

std::array<double, kZoneCount> standard_zone_areas() {
  const double r = kCenterCircleRadius;
  const double d = kPenaltyAreaDepth - kPenaltySpotDistance;
  const double goal = kGoalAreaDepth * kGoalAreaWidth;
  const double penalty = kPenaltyAreaDepth * kPenaltyAreaWidth - goal;
  const double arc = r * r * std::acos(d / r) - d * std::sqrt(r * r - d * d);
  const double circle_half = kPi * r * r / 2;
  const double strip = (kFieldLength / 2) * (kFieldWidth / 2 - kPenaltyAreaWidth / 2);
  const double band = (kFieldLength / 2 - kPenaltyAreaDepth) * (kPenaltyAreaWidth / 2) -
                      arc / 2 - circle_half / 2;
  std::array<double, kZoneCount> a{};
  for (int side = 0; side < 2; ++side) {
    a[0 + side] = goal;
    a[2 + side] = penalty;
    a[4 + side] = arc;
    a[6 + side] = circle_half;
    a[8 + 4 * side] = strip;
    a[9 + 4 * side] = strip;
    a[10 + 4 * side] = band;
    a[11 + 4 * side] = band;
  }
  return a;
}

FieldModel standard_field() {
  const double hl = kFieldLength / 2;
  const double hw = kFieldWidth / 2;
  using M = MarkingPrimitive;
  std::vector<M> marks;
  marks.push_back(M::segment({-hl, -hw}, {hl, -hw}));
  marks.push_back(M::segment({-hl, hw}, {hl, hw}));
  marks.push_back(M::segment({-hl, -hw}, {-hl, hw}));
  marks.push_back(M::segment({hl, -hw}, {hl, hw}));
  marks.push_back(M::segment({0.0, -hw}, {0.0, hw}));
  marks.push_back(M::arc({0.0, 0.0}, kCenterCircleRadius, 0.0, 2 * kPi));

  const double theta = penalty_arc_half_angle();
  for (const double s : {-1.0, 1.0}) {
    const double pa_x = s * (hl - kPenaltyAreaDepth);
    const double ga_x = s * (hl - kGoalAreaDepth);
    const double pa_y = kPenaltyAreaWidth / 2;
    const double ga_y = kGoalAreaWidth / 2;
    marks.push_back(M::segment({s * hl, -pa_y}, {pa_x, -pa_y}));
    marks.push_back(M::segment({pa_x, -pa_y}, {pa_x, pa_y}));
    marks.push_back(M::segment({pa_x, pa_y}, {s * hl, pa_y}));
    marks.push_back(M::segment({s * hl, -ga_y}, {ga_x, -ga_y}));
    marks.push_back(M::segment({ga_x, -ga_y}, {ga_x, ga_y}));
    marks.push_back(M::segment({ga_x, ga_y}, {s * hl, ga_y}));
    const Point2 spot(s * (hl - kPenaltySpotDistance), 0.0);
    const double mid = s < 0 ? 0.0 : kPi;
    marks.push_back(M::arc(spot, kCenterCircleRadius, mid - theta, mid + theta));
  }
  // Corner arcs, each a quarter circle pointing into the field.
  marks.push_back(M::arc({-hl, -hw}, kCornerArcRadius, 0.0, kPi / 2));
  marks.push_back(M::arc({hl, -hw}, kCornerArcRadius, kPi / 2, kPi));
  marks.push_back(M::arc({hl, hw}, kCornerArcRadius, kPi, 3 * kPi / 2));
  marks.push_back(M::arc({-hl, hw}, kCornerArcRadius, 3 * kPi / 2, 2 * kPi));

  static const char* const kLocalNames[8] = {
      "goal-area", "penalty-area", "penalty-arc", "center-half",
      "wing-upper", "wing-lower", "band-upper", "band-lower"};
  std::vector<Zone> zones(kZoneCount);
  for (int id = 0; id < kZoneCount; ++id) {
    const bool right = id < 8 ? (id & 1) : id >= 12;
    const int local = id < 8 ? id / 2 : 4 + (id - 8) % 4;
    Zone& z = zones[id];
    z.id = id;
    z.name = std::string(right ? "right-" : "left-") + kLocalNames[local];
    z.boundary = left_zone_polygon(local, hl, hw);
    if (right) z.boundary = mirrored(z.boundary, true, false);
    z.label_color = static_cast<std::uint8_t>(id + 1);
  }
  return FieldModel(kFieldLength, kFieldWidth, std::move(marks), std::move(zones));
}

}  // namespace fieldcal
