#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "fieldcal/calibrate.hpp"
#include "fieldcal/localization.hpp"
#include "fieldcal/random.hpp"
#include "fieldcal/synth.hpp"
#include "reference.hpp"
#include "support.hpp"

using namespace fieldcal;
using fieldcal::test::kFrame;

namespace {

const FieldModel& field() {
  static const FieldModel f = standard_field();
  return f;
}

CalibrationResult calibrated(const Homography& h) { return {h, 1, 0.0, 0}; }

Detection box(double x1, double y1, double x2, double y2) {
  Detection d;
  d.bbox = {x1, y1, x2, y2};
  return d;
}

}  // namespace

TEST_CASE("bottom-middle back-projection") {
  // One pixel per meter over exactly the field.
  const Homography h = test::top_down(1.0);
  const Detection d = box(10, 20, 14, 30);
  const auto locs = localize(std::span(&d, 1), calibrated(h), {105, 68}, field());
  REQUIRE(locs.size() == 1);
  CHECK((locs[0].position - *unproject(h, {12, 30})).norm() < 1e-12);
  CHECK((locs[0].position - Point2(-40.5, -4.0)).norm() < 1e-9);
  CHECK(locs[0].bbox_area_px == 40.0);
  CHECK(locs[0].color == Rgb{128, 128, 128});
}

TEST_CASE("detections outside the visible field are dropped") {
  const Homography h = test::camera(0);
  const auto region = visible_image_region(h, kFrame, field());
  REQUIRE(region.size() >= 3);
  // The sky band at the top of the frame.
  const double top = std::min_element(region.begin(), region.end(), [](auto& a, auto& b) {
                       return a.y() < b.y();
                     })->y();
  REQUIRE(top > 20);
  const Detection crowd = box(400, 2, 420, top - 5);
  const Detection player = box(470, 400, 490, 440);
  const std::vector<Detection> dets = {crowd, player};
  const auto locs = localize(dets, calibrated(h), kFrame, field());
  REQUIRE(locs.size() == 1);
  CHECK((locs[0].position - *unproject(h, {480, 440})).norm() < 1e-9);
}

TEST_CASE("uncalibrated frames are rejected") {
  const Detection d = box(10, 20, 14, 30);
  CalibrationResult c = calibrated(test::camera(0));
  c.relevance = 0;
  CHECK_THROWS_WITH_AS(localize(std::span(&d, 1), c, kFrame, field()), "uncalibrated frame",
                       std::invalid_argument);
}

TEST_CASE("colors: mask over the frame, stored color, fallback") {
  const Homography h = test::top_down(1.0);
  std::vector<std::uint8_t> pixels(105 * 68 * 3, 0);
  for (int y = 20; y < 30; ++y)
    for (int x = 10; x < 14; ++x) {
      auto* p = &pixels[(y * 105 + x) * 3];
      p[0] = x < 12 ? 200 : 100;
      p[1] = 50;
      p[2] = 7;
    }
  Detection d = box(10, 20, 14, 30);
  d.mask_width = 4;
  d.mask_height = 10;
  d.mask.assign(40, 0);
  for (int j = 0; j < 10; ++j) d.mask[j * 4 + 0] = d.mask[j * 4 + 3] = 1;  // one column each side
  d.mean_color = Rgb{1, 2, 3};
  const RgbImageView img{105, 68, pixels};
  auto locs = localize(std::span(&d, 1), calibrated(h), {105, 68}, field(), img);
  REQUIRE(locs.size() == 1);
  CHECK(locs[0].color == Rgb{150, 50, 7});
  locs = localize(std::span(&d, 1), calibrated(h), {105, 68}, field());
  CHECK(locs[0].color == Rgb{1, 2, 3});

  Detection bad = d;
  bad.mask_width = 3;
  CHECK_THROWS_AS(validate_detection(bad), std::invalid_argument);
  CHECK_THROWS_AS(validate_detection(box(5, 5, 5, 9)), std::invalid_argument);
}

TEST_CASE("synthetic round trip") {
  SceneParams params;
  params.players = 10;
  double ss = 0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto scene = generate_scene(params, seed, field());
    const auto locs = localize(scene.detections, calibrated(scene.truth), kFrame, field());
    // Without box noise every planted player in view is kept, in order.
    std::vector<Point2> kept;
    for (std::size_t i = 0; i < scene.detections.size(); ++i)
      kept.push_back(scene.players[scene.detection_player[i]]);
    REQUIRE(locs.size() == kept.size());
    for (std::size_t i = 0; i < locs.size(); ++i) {
      ss += (locs[i].position - kept[i]).squaredNorm();
      ++n;
    }
  }
  REQUIRE(n > 500);
  CHECK(std::sqrt(ss / n) <= 0.3);
}

TEST_CASE("field-plane translation shifts every position") {
  const auto scene = generate_scene(SceneParams{}, 3, field());
  const auto base = localize(scene.detections, calibrated(scene.truth), kFrame, field());
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 2) = -1.5;
  t(1, 2) = 0.75;
  // Field point p is seen where the original camera saw p + (-1.5, 0.75).
  const Homography moved = compose(scene.truth, Homography(t));
  const auto locs = localize(scene.detections, calibrated(moved), kFrame, field());
  REQUIRE(locs.size() == base.size());
  for (std::size_t i = 0; i < locs.size(); ++i)
    CHECK((locs[i].position - (base[i].position - Point2(-1.5, 0.75))).norm() < 1e-7);
}

TEST_CASE("dropped set does not depend on detection order") {
  SceneParams params;
  params.crowd_detections = 15;
  params.box_noise_px = 2.0;
  const auto scene = generate_scene(params, 9, field());
  auto dets = scene.detections;
  const auto a = localize(dets, calibrated(scene.truth), kFrame, field());
  std::reverse(dets.begin(), dets.end());
  auto b = localize(dets, calibrated(scene.truth), kFrame, field());
  std::reverse(b.begin(), b.end());
  CHECK(a == b);
  CHECK(a.size() < scene.detections.size());
}

TEST_CASE("player graph boundary") {
  const std::vector<PlayerLocalization> near = {{{0, 0}}, {{24.9, 0}}};
  CHECK(build_player_graph(near).edges.size() == 1);
  const std::vector<PlayerLocalization> far = {{{0, 0}}, {{25.0, 0}}};
  CHECK(build_player_graph(far).edges.empty());
  const auto empty = build_player_graph({});
  CHECK(empty.nodes.empty());
  CHECK(empty.edges.empty());
}

TEST_CASE("player graph matches exhaustive pair enumeration") {
  Rng rng(14);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = static_cast<int>(rng.index(30));
    std::vector<PlayerLocalization> locs(n);
    for (auto& l : locs) l.position = {rng.uniform(-55, 55), rng.uniform(-37, 37)};
    if (n >= 2 && trial % 3 == 0) locs[1].position = locs[0].position + Point2(25.0, 0);
    const auto g = build_player_graph(locs);
    const auto expect = test::reference_edges(locs);
    const std::set<std::pair<int, int>> got(g.edges.begin(), g.edges.end());
    CHECK(got.size() == g.edges.size());
    CHECK(got == expect);
    CHECK(std::is_sorted(g.edges.begin(), g.edges.end()));
    CHECK(g.nodes == locs);
  }
}
