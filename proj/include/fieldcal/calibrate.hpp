#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "fieldcal/dictionary.hpp"
#include "fieldcal/field_model.hpp"
#include "fieldcal/geometry.hpp"
#include "fieldcal/raster.hpp"

namespace fieldcal {

struct CalibrationOptions {
  /// Boundary points sampled from the observed segmentation.
  int sample_count = 512;
  std::uint64_t sample_seed = 0x5eed;
  int max_iterations = 100;
  double gradient_tolerance = 1e-6;
  /// Template boundaries are rendered this far (fraction of the frame)
  /// beyond each image border so warped points stay inside the field.
  double template_padding = 0.5;
  int min_boundary_points = 20;
  /// Huber threshold (pixels) on chamfer distances; 0 gives plain least
  /// squares. Bounds the pull of spurious boundary points.
  double huber_px = 2.0;
  /// Final cap (pixels) on chamfer distances. Refinement runs with caps
  /// 8x, 4x, 2x and 1x this value; 0 runs a single uncapped pass.
  double truncate_px = 10.0;
  /// Relevance thresholds.
  double residual_max_px = 3.0;
  double min_visible_area_m2 = 50.0;

  friend bool operator==(const CalibrationOptions&, const CalibrationOptions&) = default;
};

struct CalibrationResult {
  Homography homography;
  int relevance = 0;
  /// Final chamfer residual in pixels: sqrt of the mean Huber cost of the
  /// capped distances (the RMS distance when every point is within
  /// huber_px); +inf when refinement failed.
  double residual = std::numeric_limits<double>::infinity();
  int template_index = 0;
};

struct RetrievalHit {
  int index = 0;
  double distance = 0.0;
};

/// Nearest dictionary entry by descriptor L2 distance; ties go to the
/// smaller index.
RetrievalHit retrieve(const ZoneSegmentation& seg, const TemplateDictionary& dict);

/// Exact Euclidean distance (pixels) from each pixel to the nearest set
/// pixel of a row-major w x h mask; +inf everywhere if the mask is empty.
std::vector<float> distance_transform(const std::vector<std::uint8_t>& mask, int w, int h);

/// Euclidean distance to the nearest boundary pixel of a template rendered
/// over a window that extends past the frame.
class ChamferTarget {
 public:
  ChamferTarget(const Homography& template_h, const ImageFrame& frame, const FieldModel& field,
                double padding);

  /// Distance (pixels) at image point q, with its gradient.
  double sample(const Point2& q, Point2* gradient) const;

  int origin_x() const { return x0_; }
  int origin_y() const { return y0_; }
  int width() const { return w_; }
  int height() const { return h_; }

 private:
  int x0_, y0_, w_, h_;
  std::vector<float> dist_;
};

struct RefineResult {
  /// Maps template image coordinates to observed image coordinates.
  Homography correction;
  double residual = 0.0;
  double initial_residual = 0.0;
  int iterations = 0;
};

/// Boundary pixel centers of seg, subsampled deterministically.
std::vector<Point2> sample_boundary_points(const ZoneSegmentation& seg, int count,
                                           std::uint64_t seed);

/// Levenberg-Marquardt alignment of seg's zone boundaries onto the
/// template's. Throws NumericalError("insufficient field content") when seg
/// has too few boundary points.
RefineResult refine(const ZoneSegmentation& seg, const Homography& template_h,
                    const ImageFrame& frame, const FieldModel& field,
                    const CalibrationOptions& opts = {});

RefineResult refine(const ZoneSegmentation& seg, const ChamferTarget& target,
                    const CalibrationOptions& opts = {});

/// Retrieve, refine, compose and score one frame. Never throws for a bad
/// frame: failures come back with relevance 0.
CalibrationResult calibrate_frame(const ZoneSegmentation& seg, const TemplateDictionary& dict,
                                  const FieldModel& field, const CalibrationOptions& opts = {});

/// Template homography expressed in the pixel grid of `frame`.
Homography rescale_to_frame(const Homography& h, const ImageFrame& from, const ImageFrame& to);

}  // namespace fieldcal
