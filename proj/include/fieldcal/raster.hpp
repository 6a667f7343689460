#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fieldcal/field_model.hpp"
#include "fieldcal/geometry.hpp"
#include "fieldcal/player.hpp"

namespace fieldcal {

/// Per-pixel zone labels: zone id + 1, 0 for non-field pixels.
struct ZoneSegmentation {
  int width_px = 0;
  int height_px = 0;
  std::vector<std::uint8_t> labels;  // row-major

  ZoneSegmentation() = default;
  ZoneSegmentation(int w, int h) : width_px(w), height_px(h), labels(std::size_t(w) * h, 0) {}

  ImageFrame frame() const { return {width_px, height_px}; }
  std::uint8_t at(int x, int y) const { return labels[std::size_t(y) * width_px + x]; }
  std::uint8_t& at(int x, int y) { return labels[std::size_t(y) * width_px + x]; }

  friend bool operator==(const ZoneSegmentation&, const ZoneSegmentation&) = default;
};

/// Samples pixel centers; no anti-aliasing.
ZoneSegmentation render_zone_segmentation(const Homography& h, const ImageFrame& frame,
                                          const FieldModel& field);

/// Same as above over the image-space window [x0, x0 + w) x [y0, y0 + h);
/// used to render templates beyond the frame border.
ZoneSegmentation render_zone_segmentation_window(const Homography& h, int x0, int y0, int w,
                                                 int h_px, const FieldModel& field);

/// Pixels with a 4-neighbour of a different label.
std::vector<std::uint8_t> zone_boundary_mask(const ZoneSegmentation& seg);

/// Field-to-top-view mapping: the field rectangle plus a margin on each
/// side stretched (anisotropically) over a square image.
struct TopViewSpec {
  int size_px = 224;
  double margin_m = 2.0;
  double line_width_px = 4.0;
  int player_px = 8;
  double field_length_m = kFieldLength;
  double field_width_m = kFieldWidth;

  static TopViewSpec for_field(const FieldModel& field);

  double scale_x() const { return size_px / (field_length_m + 2 * margin_m); }
  double scale_y() const { return size_px / (field_width_m + 2 * margin_m); }
  /// Continuous pixel coordinates; pixel (i, j) covers [i, i+1) x [j, j+1).
  Point2 to_pixel(const Point2& p) const {
    return {(p.x() + field_length_m / 2 + margin_m) * scale_x(),
            (p.y() + field_width_m / 2 + margin_m) * scale_y()};
  }
};

enum class TopViewMode { kColorComposition, kBinaryChannels };

/// size x size x 3, interleaved. Binary-channel images hold {0, 1}.
struct TopViewImage {
  TopViewMode mode = TopViewMode::kColorComposition;
  int size_px = 224;
  std::vector<std::uint8_t> data;

  std::uint8_t at(int x, int y, int c) const {
    return data[(std::size_t(y) * size_px + x) * 3 + c];
  }
};

/// Stroke mask (one byte per pixel, {0, 1}) of the field markings.
std::vector<std::uint8_t> render_line_mask(const TopViewSpec& spec, const FieldModel& field);

/// Pixel indices covered by a player square: [x0, x0 + player_px) x
/// [y0, y0 + player_px), before clipping to the image.
std::pair<int, int> player_square_origin(const TopViewSpec& spec, const Point2& position);

TopViewImage render_color_composition(const TopViewSpec& spec,
                                      std::span<const PlayerLocalization> players,
                                      const VisiblePolygon& polygon, const FieldModel& field);

TopViewImage render_binary_channels(const TopViewSpec& spec,
                                    std::span<const PlayerLocalization> players,
                                    const VisiblePolygon& polygon, const FieldModel& field);

}  // namespace fieldcal
