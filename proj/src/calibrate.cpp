#include "fieldcal/calibrate.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "fieldcal/errors.hpp"
#include "fieldcal/random.hpp"

namespace fieldcal {

namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

constexpr double kFar = 1e20;

// 1-D squared Euclidean distance transform (lower envelope of parabolas).
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double diff = q - v[k];
    d[q] = diff * diff + f[v[k]];
  }
}

}  // namespace

std::vector<float> distance_transform(const std::vector<std::uint8_t>& mask, int w, int h) {
  std::vector<double> g(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) g[i] = mask[i] ? 0.0 : kFar;
  const int n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = g[std::size_t(y) * w + x];
    edt_1d(f.data(), d.data(), h, v, z);
    for (int y = 0; y < h; ++y) g[std::size_t(y) * w + x] = d[y];
  }
  for (int y = 0; y < h; ++y) {
    double* row = &g[std::size_t(y) * w];
    std::copy(row, row + w, f.begin());
    edt_1d(f.data(), row, w, v, z);
  }
  std::vector<float> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    out[i] = g[i] >= kFar / 2 ? kInf : static_cast<float>(std::sqrt(g[i]));
  return out;
}

namespace {

using Params = Eigen::Matrix<double, 8, 1>;

Params identity_params() {
  Params p;
  p << 1, 0, 0, 0, 1, 0, 0, 0;
  return p;
}

struct Evaluation {
  double cost = std::numeric_limits<double>::infinity();  // mean Huber cost, pixels^2
  Eigen::Matrix<double, 8, 8> jtj;
  Params jtr;
};

struct Loss {
  double huber = 0.0;     // 0: plain squares
  double truncate = 0.0;  // 0: no cap on the distance
};

// Residuals r_i = sqrt(rho(min(DT(D p_i), truncate))) where D is the chart
// homography in `p` and rho the Huber function.
Evaluation evaluate(const Params& p, std::span<const Point2> pts, const ChamferTarget& target,
                    const Loss& loss, bool with_jacobian) {
  Evaluation e;
  e.jtj.setZero();
  e.jtr.setZero();
  double sum = 0.0;
  Eigen::Matrix<double, 1, 8> row;
  for (const auto& s : pts) {
    const double w = p(6) * s.x() + p(7) * s.y() + 1.0;
    if (!(w > 1e-6)) return Evaluation{};
    const double qx = (p(0) * s.x() + p(1) * s.y() + p(2)) / w;
    const double qy = (p(3) * s.x() + p(4) * s.y() + p(5)) / w;
    Point2 grad;
    double d = target.sample({qx, qy}, with_jacobian ? &grad : nullptr);
    double dr = 1.0;  // dr/dd
    if (loss.truncate > 0 && d > loss.truncate) {
      d = loss.truncate;
      dr = 0.0;
    }
    double r = d;
    if (loss.huber > 0 && d > loss.huber) {
      r = std::sqrt(loss.huber * (2 * d - loss.huber));
      dr *= loss.huber / r;
    }
    sum += r * r;
    if (!with_jacobian || dr == 0.0) continue;
    const double gx = dr * grad.x() / w;
    const double gy = dr * grad.y() / w;
    row << gx * s.x(), gx * s.y(), gx, gy * s.x(), gy * s.y(), gy,
        -(gx * qx + gy * qy) * s.x(), -(gx * qx + gy * qy) * s.y();
    e.jtj.noalias() += row.transpose() * row;
    e.jtr.noalias() += row.transpose() * r;
  }
  const double n = static_cast<double>(pts.size());
  e.cost = sum / n;
  e.jtj /= n;
  e.jtr /= n;
  return e;
}

// Levenberg-Marquardt from `p`; only cost-decreasing steps are taken.
// Returns the iteration count.
int levenberg_marquardt(Params& p, std::span<const Point2> pts, const ChamferTarget& target,
                        const Loss& loss, const CalibrationOptions& opts) {
  Evaluation cur = evaluate(p, pts, target, loss, true);
  double lambda = 1e-3;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (cur.jtr.cwiseAbs().maxCoeff() < opts.gradient_tolerance) break;
    bool accepted = false;
    while (!accepted && lambda < 1e12) {
      Eigen::Matrix<double, 8, 8> a = cur.jtj;
      for (int i = 0; i < 8; ++i) a(i, i) += lambda * std::max(cur.jtj(i, i), 1e-12);
      const Params step = a.ldlt().solve(-cur.jtr);
      if (!step.allFinite()) {
        lambda *= 10;
        continue;
      }
      const Params trial = p + step;
      if (evaluate(trial, pts, target, loss, false).cost < cur.cost) {
        p = trial;
        cur = evaluate(p, pts, target, loss, true);
        lambda = std::max(lambda / 10, 1e-9);
        accepted = true;
      } else {
        lambda *= 10;
      }
    }
    if (!accepted) break;
  }
  return it;
}

Eigen::Matrix3d params_matrix(const Params& p) {
  Eigen::Matrix3d m;
  m << p(0), p(1), p(2), p(3), p(4), p(5), p(6), p(7), 1.0;
  return m;
}

}  // namespace

RetrievalHit retrieve(const ZoneSegmentation& seg, const TemplateDictionary& dict) {
  if (dict.entries.empty()) throw std::invalid_argument("retrieve: empty dictionary");
  const auto desc = descriptor_of(seg, dict.descriptor_spec);
  RetrievalHit best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < dict.entries.size(); ++i) {
    const double d = descriptor_distance(desc, dict.entries[i].descriptor);
    if (d < best.distance) best = {static_cast<int>(i), d};
  }
  return best;
}

ChamferTarget::ChamferTarget(const Homography& template_h, const ImageFrame& frame,
                             const FieldModel& field, double padding) {
  const int px = static_cast<int>(std::ceil(frame.width_px * padding));
  const int py = static_cast<int>(std::ceil(frame.height_px * padding));
  x0_ = -px;
  y0_ = -py;
  w_ = frame.width_px + 2 * px;
  h_ = frame.height_px + 2 * py;
  const auto seg = render_zone_segmentation_window(template_h, x0_, y0_, w_, h_, field);
  dist_ = distance_transform(zone_boundary_mask(seg), w_, h_);
  // A template without any boundary gives no signal; use a large constant.
  for (auto& d : dist_)
    if (d == kInf) d = static_cast<float>(w_ + h_);
}

double ChamferTarget::sample(const Point2& q, Point2* gradient) const {
  // Grid node (i, j) sits at the pixel center (x0 + i + 0.5, y0 + j + 0.5).
  const double gx = q.x() - x0_ - 0.5;
  const double gy = q.y() - y0_ - 0.5;
  const double cx = std::clamp(gx, 0.0, double(w_ - 1));
  const double cy = std::clamp(gy, 0.0, double(h_ - 1));
  // Outside the window: distance to the window plus the border value.
  const double ox = gx - cx;
  const double oy = gy - cy;
  const double outside = std::hypot(ox, oy);

  const int i0 = std::min(static_cast<int>(cx), w_ - 2);
  const int j0 = std::min(static_cast<int>(cy), h_ - 2);
  const double fx = cx - i0;
  const double fy = cy - j0;
  const auto at = [&](int i, int j) { return double(dist_[std::size_t(j) * w_ + i]); };
  const double d00 = at(i0, j0), d10 = at(i0 + 1, j0);
  const double d01 = at(i0, j0 + 1), d11 = at(i0 + 1, j0 + 1);
  const double value = (1 - fy) * ((1 - fx) * d00 + fx * d10) + fy * ((1 - fx) * d01 + fx * d11);
  if (gradient) {
    double dx = (1 - fy) * (d10 - d00) + fy * (d11 - d01);
    double dy = (1 - fx) * (d01 - d00) + fx * (d11 - d10);
    if (outside > 0) {
      if (ox != 0) dx = ox / outside;
      if (oy != 0) dy = oy / outside;
    }
    *gradient = Point2(dx, dy);
  }
  return value + outside;
}

std::vector<Point2> sample_boundary_points(const ZoneSegmentation& seg, int count,
                                           std::uint64_t seed) {
  const auto mask = zone_boundary_mask(seg);
  std::vector<Point2> all;
  for (int y = 0; y < seg.height_px; ++y)
    for (int x = 0; x < seg.width_px; ++x)
      if (mask[std::size_t(y) * seg.width_px + x]) all.emplace_back(x + 0.5, y + 0.5);
  if (static_cast<int>(all.size()) <= count) return all;
  // Partial Fisher-Yates.
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.index(all.size() - i));
    std::swap(all[i], all[j]);
  }
  all.resize(count);
  return all;
}

RefineResult refine(const ZoneSegmentation& seg, const ChamferTarget& target,
                    const CalibrationOptions& opts) {
  const auto pts = sample_boundary_points(seg, opts.sample_count, opts.sample_seed);
  if (static_cast<int>(pts.size()) < opts.min_boundary_points)
    throw NumericalError("insufficient field content");

  // Graduated cap on the distances: start wide for a large basin, then
  // tighten so far-off points stop pulling. The reported residual is the
  // cost at the tightest cap.
  const Loss fine{opts.huber_px, opts.truncate_px};
  Params p = identity_params();
  const double initial = evaluate(p, pts, target, fine, false).cost;
  int it = 0;
  if (opts.truncate_px > 0) {
    for (double cap = opts.truncate_px * 8; cap >= opts.truncate_px; cap /= 2)
      it += levenberg_marquardt(p, pts, target, Loss{opts.huber_px, cap}, opts);
  } else {
    it = levenberg_marquardt(p, pts, target, fine, opts);
  }
  double final_cost = evaluate(p, pts, target, fine, false).cost;
  if (!(final_cost <= initial)) {
    p = identity_params();
    final_cost = initial;
  }
  RefineResult out;
  out.initial_residual = std::sqrt(initial);
  out.residual = std::sqrt(final_cost);
  out.iterations = it;
  // The parameters describe observed -> template; invert for the correction.
  const auto d = Homography::try_make(params_matrix(p));
  if (!d) throw NumericalError("refinement produced a degenerate homography");
  out.correction = d->inverse();
  return out;
}

RefineResult refine(const ZoneSegmentation& seg, const Homography& template_h,
                    const ImageFrame& frame, const FieldModel& field,
                    const CalibrationOptions& opts) {
  const ChamferTarget target(template_h, frame, field, opts.template_padding);
  return refine(seg, target, opts);
}

Homography rescale_to_frame(const Homography& h, const ImageFrame& from, const ImageFrame& to) {
  if (from == to) return h;
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  s(0, 0) = static_cast<double>(to.width_px) / from.width_px;
  s(1, 1) = static_cast<double>(to.height_px) / from.height_px;
  return Homography(s * h.matrix());
}

CalibrationResult calibrate_frame(const ZoneSegmentation& seg, const TemplateDictionary& dict,
                                  const FieldModel& field, const CalibrationOptions& opts) {
  const RetrievalHit hit = retrieve(seg, dict);
  const ImageFrame frame = seg.frame();
  const Homography tmpl =
      rescale_to_frame(dict.entries[hit.index].homography, dict.frame, frame);

  CalibrationResult res;
  res.template_index = hit.index;
  res.homography = tmpl;
  try {
    const RefineResult r = refine(seg, tmpl, frame, field, opts);
    res.homography = compose(r.correction, tmpl);
    res.residual = r.residual;
  } catch (const NumericalError&) {
    res.relevance = 0;
    res.residual = std::numeric_limits<double>::infinity();
    return res;
  }
  const double area = visible_field_polygon(res.homography, frame, field).area();
  res.relevance =
      (res.residual <= opts.residual_max_px && area >= opts.min_visible_area_m2) ? 1 : 0;
  return res;
}

}  // namespace fieldcal
