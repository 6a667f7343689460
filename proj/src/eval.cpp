#include "fieldcal/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace fieldcal {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double polygon_iou(std::span<const Point2> a, std::span<const Point2> b) {
  const double area_a = poly::signed_area(a);
  const double area_b = poly::signed_area(b);
  const auto inter_poly = poly::clip_convex(a, b);
  const double inter = inter_poly.size() >= 3 ? std::max(0.0, poly::signed_area(inter_poly)) : 0.0;
  const double uni = area_a + area_b - inter;
  if (!(uni > 0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

constexpr std::array<std::string_view, kActionClassCount> kLabels = {
    "ball-out-of-play", "throw-in",       "foul",         "indirect-free-kick",
    "clearance",        "shots-on-target", "shots-off-target", "corner",
    "substitution",     "kick-off",       "yellow-card",  "offside",
    "direct-free-kick", "goal",           "penalty",      "yellow-to-red-card",
    "red-card"};

std::string canonical_form(std::string_view s) {
  std::string out;
  bool pending_sep = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c == '-' && i + 1 < s.size() && s[i + 1] == '>') {
      out += out.empty() ? "to" : "-to";
      pending_sep = true;
      ++i;
      continue;
    }
    if (std::isalnum(c)) {
      if (pending_sep && !out.empty()) out += '-';
      pending_sep = false;
      out += static_cast<char>(std::tolower(c));
    } else {
      pending_sep = true;
    }
  }
  return out;
}

void check_label(ActionClass c) {
  if (static_cast<int>(c) >= kActionClassCount)
    throw std::invalid_argument("unknown action class label");
}

}  // namespace

IoUPair iou_pair(const Homography& gt, const Homography& pred, const ImageFrame& frame,
                 const FieldModel& field) {
  Eigen::Matrix3d m = gt.signed_inverse() * pred.matrix();
  m /= m.norm();
  const auto rect = field.boundary().corners_ccw();
  std::vector<Point2> mapped;
  int sign = 0;
  for (const auto& c : rect) {
    const Eigen::Vector3d p = m * c.homogeneous();
    if (!(std::abs(p.z()) > 1e-12)) return {};
    const int s = p.z() > 0 ? 1 : -1;
    if (sign != 0 && s != sign) return {};
    sign = s;
    mapped.emplace_back(p.x() / p.z(), p.y() / p.z());
  }
  mapped = poly::canonicalize(std::move(mapped));
  if (mapped.size() < 3) return {};

  IoUPair out;
  out.entire = polygon_iou(rect, mapped);
  const VisiblePolygon vis = visible_field_polygon(gt, frame, field);
  if (!vis.empty()) {
    const auto pred_part = poly::canonicalize(poly::clip_convex(mapped, vis.vertices));
    out.part = pred_part.size() >= 3 ? polygon_iou(vis.vertices, pred_part) : 0.0;
  }
  return out;
}

IoUReport summarize_iou(std::span<const IoUPair> pairs) {
  IoUReport r;
  std::vector<double> e, p;
  for (const auto& x : pairs) {
    r.entire.push_back(x.entire);
    r.part.push_back(x.part);
    if (x.entire) e.push_back(*x.entire); else ++r.undefined_entire;
    if (x.part) p.push_back(*x.part); else ++r.undefined_part;
  }
  r.mean_entire = mean(e);
  r.median_entire = median(e);
  r.mean_part = mean(p);
  r.median_part = median(p);
  return r;
}

std::string_view action_label(ActionClass c) {
  check_label(c);
  return kLabels[static_cast<int>(c)];
}

std::optional<ActionClass> parse_action_label(std::string_view s) {
  std::string k = canonical_form(s);
  // SoccerNet-v2 spellings that differ from the canonical forms.
  if (k == "shots-on-target" || k == "shot-on-target") k = "shots-on-target";
  if (k == "shot-off-target") k = "shots-off-target";
  if (k == "yellow-red-card" || k == "yellow-then-red-card") k = "yellow-to-red-card";
  if (k == "ball-out") k = "ball-out-of-play";
  for (int i = 0; i < kActionClassCount; ++i)
    if (kLabels[i] == k) return static_cast<ActionClass>(i);
  return std::nullopt;
}

ClassSplit ClassSplit::standard() {
  using A = ActionClass;
  return ClassSplit{
      {A::kPenalty, A::kKickOff, A::kThrowIn, A::kDirectFreeKick, A::kCorner, A::kYellowCard,
       A::kRedCard, A::kYellowToRedCard},
      {A::kGoal, A::kSubstitution, A::kOffside, A::kShotsOnTarget, A::kShotsOffTarget,
       A::kClearance, A::kBallOutOfPlay, A::kFoul, A::kIndirectFreeKick}};
}

bool ClassSplit::is_patterned(ActionClass c) const {
  return std::find(patterned.begin(), patterned.end(), c) != patterned.end();
}

bool ClassSplit::is_fuzzy(ActionClass c) const {
  return std::find(fuzzy.begin(), fuzzy.end(), c) != fuzzy.end();
}

std::vector<double> default_margins() {
  std::vector<double> m;
  for (int d = 5; d <= 60; d += 5) m.push_back(d);
  return m;
}

std::optional<double> average_precision(std::span<const SpottingPrediction> preds,
                                        std::span<const GroundTruthAction> gts,
                                        ActionClass label, double margin) {
  std::vector<const GroundTruthAction*> truth;
  for (const auto& g : gts)
    if (g.label == label) truth.push_back(&g);
  if (truth.empty()) return std::nullopt;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].label == label) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (preds[a].confidence != preds[b].confidence)
      return preds[a].confidence > preds[b].confidence;
    return preds[a].time_s < preds[b].time_s;
  });

  std::vector<char> matched(truth.size(), 0);
  std::vector<double> precision, recall;
  precision.reserve(order.size());
  recall.reserve(order.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const SpottingPrediction& p = preds[order[k]];
    std::size_t best = truth.size();
    double best_dt = 0.0;
    for (std::size_t g = 0; g < truth.size(); ++g) {
      if (matched[g] || truth[g]->half != p.half || truth[g]->game_id != p.game_id) continue;
      const double dt = std::abs(truth[g]->time_s - p.time_s);
      if (dt <= margin && (best == truth.size() || dt < best_dt)) {
        best = g;
        best_dt = dt;
      }
    }
    if (best != truth.size()) {
      matched[best] = 1;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(truth.size()));
  }
  // All-point interpolation: precision envelope from the right.
  for (std::size_t k = precision.size(); k-- > 1;)
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < precision.size(); ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

SpottingReport average_map(std::span<const SpottingPrediction> preds,
                           std::span<const GroundTruthAction> gts,
                           std::span<const double> margins) {
  if (margins.empty()) throw std::invalid_argument("average_map: no margins");
  for (std::size_t i = 0; i < margins.size(); ++i)
    if (!(margins[i] >= 0) || (i > 0 && !(margins[i] > margins[i - 1])))
      throw std::invalid_argument("average_map: margins must be ascending and non-negative");
  if (gts.empty()) throw std::invalid_argument("average_map: no ground truth");
  for (const auto& p : preds) {
    check_label(p.label);
    if (!std::isfinite(p.confidence) || !std::isfinite(p.time_s))
      throw std::invalid_argument("average_map: non-finite prediction");
  }
  for (const auto& g : gts) check_label(g.label);

  SpottingReport r;
  r.margins.assign(margins.begin(), margins.end());
  for (const auto& g : gts) ++r.gt_count[static_cast<int>(g.label)];
  r.map_per_margin.assign(margins.size(), 0.0);
  for (int c = 0; c < kActionClassCount; ++c) {
    r.ap[c].resize(margins.size());
    for (std::size_t m = 0; m < margins.size(); ++m)
      r.ap[c][m] = average_precision(preds, gts, static_cast<ActionClass>(c), margins[m]);
  }
  for (std::size_t m = 0; m < margins.size(); ++m) {
    double sum = 0.0;
    int n = 0;
    for (int c = 0; c < kActionClassCount; ++c)
      if (r.ap[c][m]) {
        sum += *r.ap[c][m];
        ++n;
      }
    r.map_per_margin[m] = sum / n;
  }
  for (int c = 0; c < kActionClassCount; ++c) {
    if (!r.ap[c].front()) continue;
    double s = 0.0;
    for (const auto& v : r.ap[c]) s += *v;
    r.class_average_ap[c] = s / static_cast<double>(margins.size());
  }
  r.average_map = mean(r.map_per_margin);
  return r;
}

std::vector<SpottingPrediction> merge_split_predictions(
    std::span<const SpottingPrediction> patterned, std::span<const SpottingPrediction> fuzzy,
    const ClassSplit& split) {
  std::vector<SpottingPrediction> out;
  out.reserve(patterned.size() + fuzzy.size());
  for (const auto& p : patterned) {
    if (!split.is_patterned(p.label))
      throw std::invalid_argument("patterned predictions contain non-patterned class '" +
                                  std::string(action_label(p.label)) + "'");
    out.push_back(p);
  }
  for (const auto& p : fuzzy) {
    if (!split.is_fuzzy(p.label))
      throw std::invalid_argument("fuzzy predictions contain non-fuzzy class '" +
                                  std::string(action_label(p.label)) + "'");
    out.push_back(p);
  }
  return out;
}

double frame_time(std::int64_t frame_index) {
  if (frame_index < 0) throw std::invalid_argument("negative frame index");
  return static_cast<double>(frame_index) / 2.0;
}

}  // namespace fieldcal
