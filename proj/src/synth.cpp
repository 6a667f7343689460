#include "fieldcal/synth.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "fieldcal/errors.hpp"

namespace fieldcal {

Homography camera_homography(const CameraPose& pose, const ImageFrame& frame) {
  const Eigen::Vector3d c(pose.camera_xy.x(), pose.camera_xy.y(), pose.camera_height);
  const Eigen::Vector3d t(pose.target.x(), pose.target.y(), 0.0);
  const Eigen::Vector3d forward = (t - c).normalized();
  const Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ()).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  Eigen::Matrix3d k;
  k << pose.focal_px, 0, frame.width_px / 2.0, 0, pose.focal_px, frame.height_px / 2.0, 0, 0, 1;
  Eigen::Matrix3d rt;
  rt.col(0) = r.col(0);
  rt.col(1) = r.col(1);
  rt.col(2) = -r * c;
  return Homography(k * rt);
}

CameraPose sample_pose(const PoseRanges& g, const ImageFrame& frame, Rng& rng) {
  CameraPose p;
  const double x = rng.uniform(g.camera_x_min, g.camera_x_max);
  const double setback = rng.uniform(g.camera_setback_min, g.camera_setback_max);
  p.camera_xy = Point2(x, -kFieldWidth / 2 - setback);
  p.camera_height = rng.uniform(g.camera_height_min, g.camera_height_max);
  p.target = Point2(rng.uniform(g.target_x_min, g.target_x_max),
                    rng.uniform(g.target_y_min, g.target_y_max));
  p.focal_px = rng.uniform(g.focal_min, g.focal_max) * frame.width_px / 960.0;
  return p;
}

namespace {

void check_ranges(const PoseRanges& g) {
  if (g.camera_x_min > g.camera_x_max || g.camera_setback_min > g.camera_setback_max ||
      g.camera_height_min > g.camera_height_max || g.target_x_min > g.target_x_max ||
      g.target_y_min > g.target_y_max || g.focal_min > g.focal_max || !(g.focal_min > 0))
    throw std::invalid_argument("pose ranges must be non-empty");
}

std::optional<Homography> draw_visible(const SceneParams& params, const FieldModel& field,
                                       Rng& rng, CameraPose* pose) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    const CameraPose p = sample_pose(params.pose, params.frame, rng);
    const auto h = Homography::try_make(camera_homography(p, params.frame).matrix());
    if (!h) continue;
    if (visible_field_polygon(*h, params.frame, field).area() >= params.min_visible_area_m2) {
      if (pose) *pose = p;
      return h;
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<Homography> sample_homographies(const SceneParams& params, int count,
                                            std::uint64_t seed, const FieldModel& field) {
  check_ranges(params.pose);
  Rng rng(seed);
  std::vector<Homography> out;
  for (int i = 0; i < count; ++i) {
    const auto h = draw_visible(params, field, rng, nullptr);
    if (!h) throw NumericalError("pose family gives no visible field after 100 draws");
    out.push_back(*h);
  }
  return out;
}

void add_label_noise(ZoneSegmentation& seg, double fraction, Rng& rng) {
  if (!(fraction > 0)) return;
  const auto mask = zone_boundary_mask(seg);
  const ZoneSegmentation src = seg;
  const int w = seg.width_px;
  const int h = seg.height_px;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask[std::size_t(y) * w + x]) continue;
      if (!(rng.uniform() < fraction)) continue;
      const auto own = src.at(x, y);
      std::uint8_t options[4];
      int n = 0;
      if (x > 0 && src.at(x - 1, y) != own) options[n++] = src.at(x - 1, y);
      if (x + 1 < w && src.at(x + 1, y) != own) options[n++] = src.at(x + 1, y);
      if (y > 0 && src.at(x, y - 1) != own) options[n++] = src.at(x, y - 1);
      if (y + 1 < h && src.at(x, y + 1) != own) options[n++] = src.at(x, y + 1);
      seg.at(x, y) = options[rng.index(static_cast<std::uint64_t>(n))];
    }
  }
}

std::optional<BBox> player_box(const Homography& h, const Point2& foot) {
  const auto f = project(h, foot);
  const auto l = project(h, foot - Point2(0.4, 0.0));
  const auto r = project(h, foot + Point2(0.4, 0.0));
  if (!f || !l || !r) return std::nullopt;
  const double w = (*r - *l).norm();
  if (!(w > 0) || !std::isfinite(w)) return std::nullopt;
  const double ht = w * 1.8 / 0.8;
  return BBox{f->x() - w / 2, f->y() - ht, f->x() + w / 2, f->y()};
}

SyntheticScene generate_scene(const SceneParams& params, std::uint64_t seed,
                              const FieldModel& field) {
  if (params.frame.width_px < 1 || params.frame.height_px < 1)
    throw std::invalid_argument("synthetic frame must be non-empty");
  check_ranges(params.pose);

  Rng rng(seed);
  SyntheticScene s;
  s.seed = seed;
  s.frame = params.frame;
  const auto h = draw_visible(params, field, rng, &s.pose);
  if (!h) throw NumericalError("pose family gives no visible field after 100 draws");
  s.truth = *h;

  s.segmentation = render_zone_segmentation(s.truth, params.frame, field);
  add_label_noise(s.segmentation, params.label_noise, rng);

  const FieldRect rect = field.boundary();
  for (int i = 0; i < params.players; ++i)
    s.players.emplace_back(rng.uniform(rect.x_min, rect.x_max),
                           rng.uniform(rect.y_min, rect.y_max));

  const double fw = params.frame.width_px;
  const double fh = params.frame.height_px;
  for (int i = 0; i < params.players; ++i) {
    const auto box = player_box(s.truth, s.players[i]);
    const auto foot = project(s.truth, s.players[i]);
    // Noise is drawn for every player so the stream does not depend on
    // which ones are in view.
    const double n[4] = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    if (!box || !foot || !unproject_visible(s.truth, *foot)) continue;
    if (foot->x() < 0 || foot->x() >= fw || foot->y() < 0 || foot->y() >= fh) continue;
    Detection d;
    d.bbox = *box;
    d.bbox.x1 += params.box_noise_px * n[0];
    d.bbox.y1 += params.box_noise_px * n[1];
    d.bbox.x2 += params.box_noise_px * n[2];
    d.bbox.y2 += params.box_noise_px * n[3];
    if (!(d.bbox.x1 < d.bbox.x2) || !(d.bbox.y1 < d.bbox.y2)) continue;
    d.mean_color = i % 2 == 0 ? Rgb{200, 30, 30} : Rgb{30, 30, 200};
    s.detections.push_back(d);
    s.detection_player.push_back(i);
  }

  FieldRect far = rect;
  far.x_min -= 5;
  far.y_min -= 5;
  far.x_max += 5;
  far.y_max += 5;
  const auto region = params.crowd_detections > 0
                          ? visible_image_region(s.truth, params.frame, field)
                          : std::vector<Point2>{};
  for (int c = 0; c < params.crowd_detections; ++c) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      const double u = rng.uniform(0.0, fw);
      const double v = rng.uniform(0.0, fh);
      const auto p = unproject_visible(s.truth, {u, v});
      if (p && far.contains(*p)) continue;
      Detection d;
      d.bbox = BBox{u - 5, std::max(0.0, v - 25), u + 5, std::max(1.0, v)};
      // Spectator boxes must stay off the field.
      const std::vector<Point2> rect_px = {
          {d.bbox.x1, d.bbox.y1}, {d.bbox.x2, d.bbox.y1}, {d.bbox.x2, d.bbox.y2},
          {d.bbox.x1, d.bbox.y2}};
      const auto overlap = poly::clip_convex(rect_px, region);
      if (overlap.size() >= 3 && poly::signed_area(overlap) > 0) continue;
      d.mean_color = Rgb{90, 90, 90};
      s.detections.push_back(d);
      s.detection_player.push_back(-1);
      break;
    }
  }
  return s;
}

std::vector<GroundTruthAction> synth_annotations(int count, const std::string& game_id,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GroundTruthAction> out;
  for (int i = 0; i < count; ++i) {
    GroundTruthAction a;
    a.label = static_cast<ActionClass>(rng.index(kActionClassCount));
    a.half = 1 + static_cast<int>(rng.index(2));
    a.time_s = static_cast<double>(static_cast<std::int64_t>(rng.uniform(0.0, 2700.0) * 1000)) /
               1000.0;
    a.game_id = game_id;
    out.push_back(a);
  }
  return out;
}

}  // namespace fieldcal
