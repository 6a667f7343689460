#pragma once

#include <array>
#include <cstdint>

#include "fieldcal/field_model.hpp"

namespace fieldcal {

using Rgb = std::array<std::uint8_t, 3>;

/// A person (player or referee) placed on the field plane.
struct PlayerLocalization {
  Point2 position = Point2::Zero();
  Rgb color{128, 128, 128};
  double bbox_area_px = 0.0;

  friend bool operator==(const PlayerLocalization&, const PlayerLocalization&) = default;
};

}  // namespace fieldcal
