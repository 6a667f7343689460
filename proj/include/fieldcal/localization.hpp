#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fieldcal/calibrate.hpp"
#include "fieldcal/field_model.hpp"
#include "fieldcal/geometry.hpp"
#include "fieldcal/player.hpp"

namespace fieldcal {

inline constexpr double kGraphEdgeDistance = 25.0;
inline constexpr double kLocalizationTolerance = 3.0;

struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double area() const { return (x2 - x1) * (y2 - y1); }
  friend bool operator==(const BBox&, const BBox&) = default;
};

/// One person instance from an external detector.
struct Detection {
  BBox bbox;
  /// Optional instance mask, row-major over the bbox's integer extent
  /// (mask_width x mask_height), 1 = person.
  std::vector<std::uint8_t> mask;
  int mask_width = 0;
  int mask_height = 0;
  std::optional<Rgb> mean_color;

  bool has_mask() const { return !mask.empty(); }
  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Integer pixel extent a mask must cover for `box`: columns
/// [floor(x1), floor(x1) + w), rows likewise.
std::pair<int, int> mask_extent(const BBox& box);

/// Throws std::invalid_argument when bbox or mask dimensions are invalid.
void validate_detection(const Detection& d);

/// Read-only RGB frame, row-major interleaved.
struct RgbImageView {
  int width_px = 0;
  int height_px = 0;
  std::span<const std::uint8_t> pixels;
};

struct PlayerGraph {
  std::vector<PlayerLocalization> nodes;
  std::vector<std::pair<int, int>> edges;  // i < j, lexicographic order
};

/// Image-space region where the calibration sees the field: the visible
/// field polygon projected back into the frame.
std::vector<Point2> visible_image_region(const Homography& h, const ImageFrame& frame,
                                         const FieldModel& field);

/// Places every detection that overlaps the visible field at the
/// back-projection of its bottom-middle point. Throws std::invalid_argument
/// ("uncalibrated frame") when calib.relevance is 0.
std::vector<PlayerLocalization> localize(std::span<const Detection> dets,
                                         const CalibrationResult& calib, const ImageFrame& frame,
                                         const FieldModel& field,
                                         const std::optional<RgbImageView>& image = std::nullopt);

/// Edge (i, j) iff the players are strictly closer than 25 m.
PlayerGraph build_player_graph(std::span<const PlayerLocalization> locs);

}  // namespace fieldcal
