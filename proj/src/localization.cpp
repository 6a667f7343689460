#include "fieldcal/localization.hpp"

#include <cmath>
#include <stdexcept>

namespace fieldcal {

std::pair<int, int> mask_extent(const BBox& box) {
  const int w = static_cast<int>(std::ceil(box.x2) - std::floor(box.x1));
  const int h = static_cast<int>(std::ceil(box.y2) - std::floor(box.y1));
  return {w, h};
}

void validate_detection(const Detection& d) {
  const BBox& b = d.bbox;
  if (!std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) ||
      !std::isfinite(b.y2) || !(b.x1 < b.x2) || !(b.y1 < b.y2))
    throw std::invalid_argument("bbox must satisfy x1 < x2 and y1 < y2");
  if (d.has_mask()) {
    const auto [w, h] = mask_extent(b);
    if (d.mask_width != w || d.mask_height != h ||
        d.mask.size() != std::size_t(w) * std::size_t(h))
      throw std::invalid_argument("mask dimensions do not match the bbox");
  }
}

std::vector<Point2> visible_image_region(const Homography& h, const ImageFrame& frame,
                                         const FieldModel& field) {
  const VisiblePolygon vis = visible_field_polygon(h, frame, field);
  std::vector<Point2> out;
  for (const auto& v : vis.vertices)
    if (const auto q = project(h, v)) out.push_back(*q);
  return poly::canonicalize(std::move(out));
}

namespace {

std::optional<Rgb> mask_color(const Detection& d, const RgbImageView& img) {
  const int ox = static_cast<int>(std::floor(d.bbox.x1));
  const int oy = static_cast<int>(std::floor(d.bbox.y1));
  std::array<double, 3> sum{0, 0, 0};
  std::size_t count = 0;
  for (int j = 0; j < d.mask_height; ++j) {
    for (int i = 0; i < d.mask_width; ++i) {
      if (!d.mask[std::size_t(j) * d.mask_width + i]) continue;
      const int x = ox + i;
      const int y = oy + j;
      if (x < 0 || y < 0 || x >= img.width_px || y >= img.height_px) continue;
      const auto* px = &img.pixels[(std::size_t(y) * img.width_px + x) * 3];
      for (int c = 0; c < 3; ++c) sum[c] += px[c];
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  Rgb out;
  for (int c = 0; c < 3; ++c)
    out[c] = static_cast<std::uint8_t>(std::lround(sum[c] / static_cast<double>(count)));
  return out;
}

}  // namespace

std::vector<PlayerLocalization> localize(std::span<const Detection> dets,
                                         const CalibrationResult& calib, const ImageFrame& frame,
                                         const FieldModel& field,
                                         const std::optional<RgbImageView>& image) {
  if (calib.relevance != 1) throw std::invalid_argument("uncalibrated frame");
  if (image && (image->width_px != frame.width_px || image->height_px != frame.height_px ||
                image->pixels.size() != std::size_t(frame.width_px) * frame.height_px * 3))
    throw std::invalid_argument("frame image does not match the frame size");

  const auto region = visible_image_region(calib.homography, frame, field);
  FieldRect allowed = field.boundary();
  allowed.x_min -= kLocalizationTolerance;
  allowed.y_min -= kLocalizationTolerance;
  allowed.x_max += kLocalizationTolerance;
  allowed.y_max += kLocalizationTolerance;

  std::vector<PlayerLocalization> out;
  if (region.size() < 3) return out;
  for (const auto& d : dets) {
    validate_detection(d);
    const BBox& b = d.bbox;
    const std::vector<Point2> rect = {{b.x1, b.y1}, {b.x2, b.y1}, {b.x2, b.y2}, {b.x1, b.y2}};
    const auto overlap = poly::clip_convex(rect, region);
    if (overlap.size() < 3 || !(poly::signed_area(overlap) > 0)) continue;

    const auto pos = unproject_visible(calib.homography, Point2((b.x1 + b.x2) / 2, b.y2));
    if (!pos || !allowed.contains(*pos)) continue;

    PlayerLocalization loc;
    loc.position = *pos;
    loc.bbox_area_px = b.area();
    std::optional<Rgb> color;
    if (image && d.has_mask()) color = mask_color(d, *image);
    if (!color) color = d.mean_color;
    loc.color = color.value_or(Rgb{128, 128, 128});
    out.push_back(loc);
  }
  return out;
}

PlayerGraph build_player_graph(std::span<const PlayerLocalization> locs) {
  PlayerGraph g;
  g.nodes.assign(locs.begin(), locs.end());
  for (std::size_t i = 0; i < locs.size(); ++i)
    for (std::size_t j = i + 1; j < locs.size(); ++j)
      if ((locs[i].position - locs[j].position).norm() < kGraphEdgeDistance)
        g.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return g;
}

}  // namespace fieldcal
