#pragma once

#include <cstdint>
#include <vector>

#include "fieldcal/eval.hpp"
#include "fieldcal/field_model.hpp"
#include "fieldcal/geometry.hpp"
#include "fieldcal/localization.hpp"
#include "fieldcal/random.hpp"
#include "fieldcal/raster.hpp"

namespace fieldcal {

/// Main broadcast camera: elevated, behind one touchline, looking at a
/// point on the pitch. Distances in meters, focal length in pixels.
struct PoseRanges {
  double camera_x_min = -10, camera_x_max = 10;
  double camera_setback_min = 25, camera_setback_max = 40;  // behind the near touchline
  double camera_height_min = 14, camera_height_max = 22;
  double target_x_min = -38, target_x_max = 38;
  double target_y_min = -12, target_y_max = 12;
  double focal_min = 800, focal_max = 1400;  // at 960 px width; scaled with frame width
};

struct CameraPose {
  Point2 camera_xy = Point2::Zero();
  double camera_height = 0;
  Point2 target = Point2::Zero();
  double focal_px = 0;
};

/// Pinhole homography K [r1 r2 t] for a camera looking at `pose.target`.
Homography camera_homography(const CameraPose& pose, const ImageFrame& frame);

CameraPose sample_pose(const PoseRanges& ranges, const ImageFrame& frame, Rng& rng);

struct SceneParams {
  ImageFrame frame{960, 540};
  PoseRanges pose;
  int players = 22;
  /// Fraction of zone-boundary pixels relabelled to a neighbouring zone.
  double label_noise = 0.0;
  /// Standard deviation (pixels) added to every bbox coordinate.
  double box_noise_px = 0.0;
  /// Extra off-field detections (spectators) placed outside the field.
  int crowd_detections = 0;
  double min_visible_area_m2 = 200.0;
};

struct SyntheticScene {
  Homography truth;
  CameraPose pose;
  ImageFrame frame;
  std::vector<Point2> players;
  ZoneSegmentation segmentation;
  std::vector<Detection> detections;
  /// Planted player index per detection; -1 for spectators.
  std::vector<int> detection_player;
  std::uint64_t seed = 0;
};

/// Deterministic in (params, seed). Throws NumericalError when 100 pose
/// draws all leave less than min_visible_area_m2 of field in view.
SyntheticScene generate_scene(const SceneParams& params, std::uint64_t seed,
                              const FieldModel& field);

/// `count` camera homographies from the pose family, each leaving at least
/// params.min_visible_area_m2 of field in view. Same rejection rule and
/// error as generate_scene.
std::vector<Homography> sample_homographies(const SceneParams& params, int count,
                                            std::uint64_t seed, const FieldModel& field);

/// Relabels a fraction of boundary pixels to a differing 4-neighbour label.
void add_label_noise(ZoneSegmentation& seg, double fraction, Rng& rng);

/// Image bbox of a standing player whose feet are at `foot` (0.8 m wide,
/// 1.8 m tall at the local ground scale), bottom-middle on the foot point.
std::optional<BBox> player_box(const Homography& h, const Point2& foot);

/// Random spotting annotations spread over both halves of one game.
std::vector<GroundTruthAction> synth_annotations(int count, const std::string& game_id,
                                                 std::uint64_t seed);

}  // namespace fieldcal
