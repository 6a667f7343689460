#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fieldcal/calibrate.hpp"
#include "fieldcal/dictionary.hpp"
#include "fieldcal/field_model.hpp"
#include "fieldcal/raster.hpp"

namespace fieldcal {

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 picks the
/// hardware concurrency; negative throws std::invalid_argument). If bodies throw, the exception of the smallest
/// failing index is rethrown after all workers have stopped.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

/// calibrate_frame over a batch; results are in input order and do not
/// depend on the thread count.
std::vector<CalibrationResult> calibrate_batch(std::span<const ZoneSegmentation> segs,
                                               const TemplateDictionary& dict,
                                               const FieldModel& field,
                                               const CalibrationOptions& opts, int threads);

}  // namespace fieldcal
