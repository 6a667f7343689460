#pragma once

// Versioned JSON documents, image directories and atomic file output.
// Every parse_* function throws FormatError with a message of the form
// "<source>: <record>: field '<name>': <problem>".

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "fieldcal/calibrate.hpp"
#include "fieldcal/dictionary.hpp"
#include "fieldcal/eval.hpp"
#include "fieldcal/field_model.hpp"
#include "fieldcal/geometry.hpp"
#include "fieldcal/localization.hpp"
#include "fieldcal/player.hpp"
#include "fieldcal/raster.hpp"

namespace fieldcal::io {

inline constexpr int kFormatVersion = 1;

/// Identifies one broadcast frame.
struct FrameKey {
  std::string game_id;
  int half = 1;
  std::int64_t frame_index = 0;

  friend bool operator==(const FrameKey&, const FrameKey&) = default;
  friend auto operator<=>(const FrameKey& a, const FrameKey& b) {
    return std::tie(a.game_id, a.half, a.frame_index) <=>
           std::tie(b.game_id, b.half, b.frame_index);
  }
};

std::string to_string(const FrameKey& key);

struct FrameRecord {
  FrameKey key;
  Homography homography;
  int relevance = 0;
  double residual = 0.0;  // +inf is stored as null
  int template_index = 0;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct CalibrationDocument {
  ImageFrame frame{960, 540};
  /// Options the estimates were produced with; absent for ground truth.
  std::optional<CalibrationOptions> options;
  std::vector<FrameRecord> frames;
};

struct DetectionFrame {
  FrameKey key;
  std::vector<Detection> detections;
};

struct LocalizationFrame {
  FrameKey key;
  std::vector<PlayerLocalization> players;
};

struct GraphFrame {
  FrameKey key;
  PlayerGraph graph;
};

struct SegmentationFrame {
  FrameKey key;
  ZoneSegmentation segmentation;
};

/// Run-length code of a row-major 0/1 mask: alternating run lengths,
/// starting with a (possibly empty) run of zeros.
std::vector<std::uint32_t> rle_encode(const std::vector<std::uint8_t>& mask);
/// Throws FormatError when the runs do not add up to `size`.
std::vector<std::uint8_t> rle_decode(const std::vector<std::uint32_t>& counts, std::size_t size);

std::string serialize_calibration(const CalibrationDocument& doc);
CalibrationDocument parse_calibration(std::string_view text, std::string_view source);

std::string serialize_detections(const std::vector<DetectionFrame>& frames);
std::vector<DetectionFrame> parse_detections(std::string_view text, std::string_view source);

std::string serialize_localizations(const std::vector<LocalizationFrame>& frames);
std::vector<LocalizationFrame> parse_localizations(std::string_view text,
                                                   std::string_view source);

std::string serialize_graphs(const std::vector<GraphFrame>& frames);
std::vector<GraphFrame> parse_graphs(std::string_view text, std::string_view source);

/// Times are written as integer milliseconds from the half start.
std::string serialize_annotations(const std::vector<GroundTruthAction>& actions);
std::vector<GroundTruthAction> parse_annotations(std::string_view text, std::string_view source);

std::string serialize_predictions(const std::vector<SpottingPrediction>& preds);
/// Also accepts an annotations document, every action at confidence 1.
std::vector<SpottingPrediction> parse_predictions(std::string_view text, std::string_view source);

std::string serialize_field_model(const FieldModel& field);

std::string serialize_iou_report(const IoUReport& report);
std::string serialize_spotting_report(const SpottingReport& report);

// ---------------------------------------------------------------------------
// Files and directories

std::string read_text(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

/// Directory output staged in a temporary sibling; commit() swaps it into
/// place, otherwise the destructor removes it.
class StagedDirectory {
 public:
  explicit StagedDirectory(std::filesystem::path target);
  ~StagedDirectory();
  StagedDirectory(const StagedDirectory&) = delete;
  StagedDirectory& operator=(const StagedDirectory&) = delete;

  const std::filesystem::path& path() const { return staging_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

/// Writes into an existing directory: meta.json plus templates/NNNNN.png.
void write_dictionary_files(const std::filesystem::path& dir, const TemplateDictionary& dict);
void write_dictionary(const std::filesystem::path& dir, const TemplateDictionary& dict);
/// Templates are re-read and their descriptors recomputed.
TemplateDictionary read_dictionary(const std::filesystem::path& dir);

/// index.json plus one 8-bit label PNG per frame.
void write_segmentation_files(const std::filesystem::path& dir,
                              const std::vector<SegmentationFrame>& frames);
std::vector<SegmentationFrame> read_segmentations(const std::filesystem::path& dir);

}  // namespace fieldcal::io
