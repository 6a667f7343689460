#include "fieldcal/raster.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace fieldcal {

namespace {

constexpr double kArcStepPx = 0.25;

// Marks pixels whose center lies within `half_width` of segment a-b.
void stroke_segment(std::vector<std::uint8_t>& mask, int size, const Point2& a, const Point2& b,
                    double half_width) {
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - half_width)));
  const int x1 =
      std::min(size - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + half_width)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - half_width)));
  const int y1 =
      std::min(size - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + half_width)));
  const Point2 d = b - a;
  const double len2 = d.squaredNorm();
  const double hw2 = half_width * half_width;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Point2 c(x + 0.5, y + 0.5);
      double t = len2 > 0 ? (c - a).dot(d) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      if ((c - (a + t * d)).squaredNorm() <= hw2) mask[std::size_t(y) * size + x] = 1;
    }
  }
}

void stroke_marking(std::vector<std::uint8_t>& mask, const TopViewSpec& spec,
                    const MarkingPrimitive& m) {
  const double hw = spec.line_width_px / 2;
  if (m.kind == MarkingPrimitive::Kind::kSegment) {
    stroke_segment(mask, spec.size_px, spec.to_pixel(m.a), spec.to_pixel(m.b), hw);
    return;
  }
  const double len_px = m.length() * std::max(spec.scale_x(), spec.scale_y());
  const int steps = std::max(16, static_cast<int>(std::ceil(len_px / kArcStepPx)));
  Point2 prev = spec.to_pixel(m.point_at(0.0));
  for (int i = 1; i <= steps; ++i) {
    const Point2 cur = spec.to_pixel(m.point_at(static_cast<double>(i) / steps));
    stroke_segment(mask, spec.size_px, prev, cur, hw);
    prev = cur;
  }
}

std::vector<Point2> polygon_to_pixels(const TopViewSpec& spec, const VisiblePolygon& polygon) {
  std::vector<Point2> px;
  px.reserve(polygon.vertices.size());
  for (const auto& v : polygon.vertices) px.push_back(spec.to_pixel(v));
  return px;
}

template <typename Fn>
void for_each_player_pixel(const TopViewSpec& spec, const Point2& position, Fn&& fn) {
  const auto [x0, y0] = player_square_origin(spec, position);
  for (int y = std::max(0, y0); y < std::min(spec.size_px, y0 + spec.player_px); ++y)
    for (int x = std::max(0, x0); x < std::min(spec.size_px, x0 + spec.player_px); ++x) fn(x, y);
}

}  // namespace

ZoneSegmentation render_zone_segmentation_window(const Homography& h, int x0, int y0, int w,
                                                 int h_px, const FieldModel& field) {
  ZoneSegmentation seg(w, h_px);
  const Eigen::Matrix3d g = h.signed_inverse();
  for (int y = 0; y < h_px; ++y) {
    const double v = y0 + y + 0.5;
    for (int x = 0; x < w; ++x) {
      const double u = x0 + x + 0.5;
      const double pz = g(2, 0) * u + g(2, 1) * v + g(2, 2);
      if (!(pz > kHorizonEpsilon)) continue;
      const Point2 p((g(0, 0) * u + g(0, 1) * v + g(0, 2)) / pz,
                     (g(1, 0) * u + g(1, 1) * v + g(1, 2)) / pz);
      if (const auto z = field.zone_at(p)) seg.at(x, y) = static_cast<std::uint8_t>(*z + 1);
    }
  }
  return seg;
}

ZoneSegmentation render_zone_segmentation(const Homography& h, const ImageFrame& frame,
                                          const FieldModel& field) {
  return render_zone_segmentation_window(h, 0, 0, frame.width_px, frame.height_px, field);
}

std::vector<std::uint8_t> zone_boundary_mask(const ZoneSegmentation& seg) {
  const int w = seg.width_px;
  const int h = seg.height_px;
  std::vector<std::uint8_t> mask(std::size_t(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto l = seg.at(x, y);
      if ((x > 0 && seg.at(x - 1, y) != l) || (x + 1 < w && seg.at(x + 1, y) != l) ||
          (y > 0 && seg.at(x, y - 1) != l) || (y + 1 < h && seg.at(x, y + 1) != l))
        mask[std::size_t(y) * w + x] = 1;
    }
  }
  return mask;
}

TopViewSpec TopViewSpec::for_field(const FieldModel& field) {
  TopViewSpec s;
  s.field_length_m = field.length_m();
  s.field_width_m = field.width_m();
  return s;
}

std::pair<int, int> player_square_origin(const TopViewSpec& spec, const Point2& position) {
  const Point2 c = spec.to_pixel(position);
  const int half = spec.player_px / 2;
  return {static_cast<int>(std::lround(c.x())) - half,
          static_cast<int>(std::lround(c.y())) - half};
}

std::vector<std::uint8_t> render_line_mask(const TopViewSpec& spec, const FieldModel& field) {
  std::vector<std::uint8_t> mask(std::size_t(spec.size_px) * spec.size_px, 0);
  for (const auto& m : field.markings()) stroke_marking(mask, spec, m);
  return mask;
}

TopViewImage render_color_composition(const TopViewSpec& spec,
                                      std::span<const PlayerLocalization> players,
                                      const VisiblePolygon& polygon, const FieldModel& field) {
  const int n = spec.size_px;
  TopViewImage img{TopViewMode::kColorComposition, n, std::vector<std::uint8_t>(std::size_t(n) * n * 3, 0)};
  auto set = [&](int x, int y, const Rgb& c) {
    auto* px = &img.data[(std::size_t(y) * n + x) * 3];
    px[0] = c[0];
    px[1] = c[1];
    px[2] = c[2];
  };
  constexpr Rgb kWhite{255, 255, 255};

  std::vector<std::uint8_t> white = render_line_mask(spec, field);
  if (!polygon.empty()) {
    const auto px = polygon_to_pixels(spec, polygon);
    for (std::size_t i = 0; i < px.size(); ++i)
      stroke_segment(white, n, px[i], px[(i + 1) % px.size()], spec.line_width_px / 2);
  }
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if (white[std::size_t(y) * n + x]) set(x, y, kWhite);

  for (const auto& p : players)
    for_each_player_pixel(spec, p.position, [&](int x, int y) { set(x, y, p.color); });
  return img;
}

TopViewImage render_binary_channels(const TopViewSpec& spec,
                                    std::span<const PlayerLocalization> players,
                                    const VisiblePolygon& polygon, const FieldModel& field) {
  const int n = spec.size_px;
  TopViewImage img{TopViewMode::kBinaryChannels, n, std::vector<std::uint8_t>(std::size_t(n) * n * 3, 0)};
  const auto lines = render_line_mask(spec, field);
  for (std::size_t i = 0; i < lines.size(); ++i) img.data[i * 3] = lines[i];

  if (!polygon.empty()) {
    const auto px = polygon_to_pixels(spec, polygon);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        if (poly::contains_convex(px, Point2(x + 0.5, y + 0.5)))
          img.data[(std::size_t(y) * n + x) * 3 + 1] = 1;
  }
  for (const auto& p : players)
    for_each_player_pixel(spec, p.position,
                          [&](int x, int y) { img.data[(std::size_t(y) * n + x) * 3 + 2] = 1; });
  return img;
}

}  // namespace fieldcal
