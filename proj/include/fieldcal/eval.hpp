#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fieldcal/field_model.hpp"
#include "fieldcal/geometry.hpp"

namespace fieldcal {

// ---------------------------------------------------------------------------
// Calibration metric

struct IoUPair {
  std::optional<double> entire;
  std::optional<double> part;
};

/// Overlap, in the ground-truth top view, between the field rectangle and
/// its image under the predicted camera re-projected by the ground-truth
/// one. `part` restricts both sets to the ground-truth visible polygon.
/// Both are undefined when the map sends part of the field to infinity.
IoUPair iou_pair(const Homography& gt, const Homography& pred, const ImageFrame& frame,
                 const FieldModel& field);

struct IoUReport {
  std::vector<std::optional<double>> entire;
  std::vector<std::optional<double>> part;
  double mean_entire = 0, median_entire = 0;
  double mean_part = 0, median_part = 0;
  int undefined_entire = 0;
  int undefined_part = 0;
};

/// Aggregates over defined entries only; undefined ones are counted.
IoUReport summarize_iou(std::span<const IoUPair> pairs);

// ---------------------------------------------------------------------------
// Action spotting metric

inline constexpr int kActionClassCount = 17;

/// SoccerNet-v2 action classes, in leaderboard column order.
enum class ActionClass : std::uint8_t {
  kBallOutOfPlay,
  kThrowIn,
  kFoul,
  kIndirectFreeKick,
  kClearance,
  kShotsOnTarget,
  kShotsOffTarget,
  kCorner,
  kSubstitution,
  kKickOff,
  kYellowCard,
  kOffside,
  kDirectFreeKick,
  kGoal,
  kPenalty,
  kYellowToRedCard,
  kRedCard,
};

/// Canonical lowercase-hyphenated label, e.g. "yellow-to-red-card".
std::string_view action_label(ActionClass c);

/// Accepts canonical labels and the original SoccerNet spellings
/// ("Ball out of play", "Yellow->red card", ...).
std::optional<ActionClass> parse_action_label(std::string_view s);

struct ClassSplit {
  std::vector<ActionClass> patterned;
  std::vector<ActionClass> fuzzy;

  static ClassSplit standard();
  bool is_patterned(ActionClass c) const;
  bool is_fuzzy(ActionClass c) const;
};

struct GroundTruthAction {
  ActionClass label{};
  double time_s = 0.0;
  int half = 1;
  std::string game_id;

  friend bool operator==(const GroundTruthAction&, const GroundTruthAction&) = default;
};

struct SpottingPrediction {
  ActionClass label{};
  double time_s = 0.0;
  int half = 1;
  std::string game_id;
  double confidence = 0.0;

  friend bool operator==(const SpottingPrediction&, const SpottingPrediction&) = default;
};

struct SpottingReport {
  std::vector<double> margins;
  /// ap[class][margin]; nullopt for classes without ground truth.
  std::array<std::vector<std::optional<double>>, kActionClassCount> ap;
  std::array<int, kActionClassCount> gt_count{};
  std::vector<double> map_per_margin;
  /// Per-class AP averaged over the margins (the leaderboard cells).
  std::array<std::optional<double>, kActionClassCount> class_average_ap;
  double average_map = 0.0;
};

/// {5, 10, ..., 60} seconds.
std::vector<double> default_margins();

/// Average precision of one class at one margin: confidence-ordered greedy
/// matching to the nearest unmatched ground truth within the margin, then
/// the area under the precision envelope. Returns nullopt without ground
/// truth.
std::optional<double> average_precision(std::span<const SpottingPrediction> preds,
                                        std::span<const GroundTruthAction> gts,
                                        ActionClass label, double margin);

SpottingReport average_map(std::span<const SpottingPrediction> preds,
                           std::span<const GroundTruthAction> gts,
                           std::span<const double> margins);

/// Concatenates the two networks' outputs after checking each side only
/// carries its own classes.
std::vector<SpottingPrediction> merge_split_predictions(
    std::span<const SpottingPrediction> patterned, std::span<const SpottingPrediction> fuzzy,
    const ClassSplit& split);

/// Seconds from the half start for a frame sampled at 2 fps.
double frame_time(std::int64_t frame_index);

}  // namespace fieldcal
