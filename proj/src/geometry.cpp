#include "fieldcal/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fieldcal/errors.hpp"

namespace fieldcal {

Eigen::Matrix3d normalize_matrix(const Eigen::Matrix3d& m) {
  const double n = m.norm();
  if (!std::isfinite(n) || n == 0.0) throw NumericalError("homography is zero or not finite");
  // Skipping the division for already-unit input keeps normalization
  // idempotent bit-for-bit.
  Eigen::Matrix3d out = std::abs(n - 1.0) <= 64 * std::numeric_limits<double>::epsilon()
                            ? m
                            : Eigen::Matrix3d(m / n);
  if (std::abs(out(2, 2)) > 1e-9 && out(2, 2) < 0) out = -out;
  return out;
}

Homography::Homography(const Eigen::Matrix3d& m) : h_(normalize_matrix(m)) {
  if (!(std::abs(h_.determinant()) > kDetTolerance))
    throw NumericalError("degenerate homography (|det| below tolerance)");
}

std::optional<Homography> Homography::try_make(const Eigen::Matrix3d& m) {
  if (!m.allFinite() || m.norm() == 0.0) return std::nullopt;
  const Eigen::Matrix3d n = normalize_matrix(m);
  if (!(std::abs(n.determinant()) > kDetTolerance)) return std::nullopt;
  return Homography(n);
}

Homography Homography::inverse() const { return Homography(h_.inverse()); }

Eigen::Matrix3d Homography::signed_inverse() const {
  const Eigen::Matrix3d inv = h_.inverse();
  return inv / inv.norm();
}

double VisiblePolygon::area() const { return empty() ? 0.0 : poly::signed_area(vertices); }

std::optional<Point2> project(const Homography& h, const Point2& p) {
  const Eigen::Vector3d q = h.matrix() * Eigen::Vector3d(p.x(), p.y(), 1.0);
  if (!(std::abs(q.z()) > kProjectEpsilon)) return std::nullopt;
  return Point2(q.x() / q.z(), q.y() / q.z());
}

std::optional<Point2> unproject(const Homography& h, const Point2& q) {
  const Eigen::Vector3d p = h.signed_inverse() * Eigen::Vector3d(q.x(), q.y(), 1.0);
  if (!(std::abs(p.z()) > kProjectEpsilon)) return std::nullopt;
  return Point2(p.x() / p.z(), p.y() / p.z());
}

std::optional<Point2> unproject_visible(const Homography& h, const Point2& q) {
  const Eigen::Vector3d p = h.signed_inverse() * Eigen::Vector3d(q.x(), q.y(), 1.0);
  if (!(p.z() > kHorizonEpsilon)) return std::nullopt;
  return Point2(p.x() / p.z(), p.y() / p.z());
}

Homography compose(const Homography& a, const Homography& b) {
  return Homography(a.matrix() * b.matrix());
}

namespace {

// Similarity taking the centroid to the origin and the mean distance to
// sqrt(2).
Eigen::Matrix3d hartley_conditioner(std::span<const Point2> pts) {
  Point2 c = Point2::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - c).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0)) throw NumericalError("DLT: coincident points");
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return t;
}

bool any_three_collinear(std::span<const Point2> p) {
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      for (std::size_t k = j + 1; k < p.size(); ++k) {
        const Point2 u = p[j] - p[i];
        const Point2 v = p[k] - p[i];
        const double cross = u.x() * v.y() - u.y() * v.x();
        if (std::abs(cross) <= 1e-9 * std::max(1.0, u.norm() * v.norm())) return true;
      }
  return false;
}

}  // namespace

Homography estimate_dlt(std::span<const Correspondence> pairs) {
  if (pairs.size() < 4) throw std::invalid_argument("DLT needs at least 4 correspondences");
  std::vector<Point2> src, dst;
  src.reserve(pairs.size());
  dst.reserve(pairs.size());
  for (const auto& c : pairs) {
    src.push_back(c.field);
    dst.push_back(c.image);
  }
  const Eigen::Matrix3d ts = hartley_conditioner(src);
  const Eigen::Matrix3d td = hartley_conditioner(dst);
  for (auto& p : src) p = (ts * p.homogeneous()).hnormalized();
  for (auto& p : dst) p = (td * p.homogeneous()).hnormalized();

  if (pairs.size() == 4 && (any_three_collinear(src) || any_three_collinear(dst)))
    throw NumericalError("DLT: three collinear points among four");

  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(2 * n, 9), 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = src[i].x(), y = src[i].y();
    const double u = dst[i].x(), v = dst[i].y();
    a.row(2 * i) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    a.row(2 * i + 1) << x, y, 1, 0, 0, 0, -u * x, -u * y, -u;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(7) > 1e-10 * s(0))) throw NumericalError("DLT: rank-deficient design matrix");
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  const Eigen::Matrix3d full = td.inverse() * hn * ts;
  auto out = Homography::try_make(full);
  if (!out) throw NumericalError("DLT: degenerate solution");
  return *out;
}

VisiblePolygon visible_field_polygon(const Homography& h, const ImageFrame& frame,
                                     const FieldModel& field) {
  const Eigen::Matrix3d g = h.signed_inverse();
  const double w = frame.width_px;
  const double ht = frame.height_px;
  const std::vector<Point2> rect = {{0, 0}, {w, 0}, {w, ht}, {0, ht}};
  const auto below_horizon =
      poly::clip_half_plane(rect, g(2, 0), g(2, 1), g(2, 2) - kHorizonEpsilon);
  if (below_horizon.size() < 3) return {};

  std::vector<Point2> ground;
  ground.reserve(below_horizon.size());
  for (const auto& q : below_horizon) {
    const Eigen::Vector3d p = g * q.homogeneous();
    // Vertices exactly on the clip line can dip under epsilon by rounding.
    const double z = std::max(p.z(), kHorizonEpsilon);
    ground.emplace_back(p.x() / z, p.y() / z);
  }
  ground = poly::canonicalize(std::move(ground));
  if (ground.size() < 3) return {};
  const auto b = field.boundary().corners_ccw();
  auto clipped = poly::canonicalize(poly::clip_convex(ground, b));
  if (clipped.size() < 3 || !(poly::signed_area(clipped) > 0)) return {};
  return VisiblePolygon{std::move(clipped)};
}

namespace poly {

double signed_area(std::span<const Point2> p) {
  double a = 0.0;
  for (std::size_t i = 0, n = p.size(); i < n; ++i) {
    const Point2& u = p[i];
    const Point2& v = p[(i + 1) % n];
    a += u.x() * v.y() - v.x() * u.y();
  }
  return 0.5 * a;
}

std::vector<Point2> clip_half_plane(std::span<const Point2> p, double a, double b, double c) {
  std::vector<Point2> out;
  const std::size_t n = p.size();
  if (n == 0) return out;
  out.reserve(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2& cur = p[i];
    const Point2& nxt = p[(i + 1) % n];
    const double dc = a * cur.x() + b * cur.y() + c;
    const double dn = a * nxt.x() + b * nxt.y() + c;
    if (dc >= 0) out.push_back(cur);
    if ((dc >= 0) != (dn >= 0)) {
      const double t = dc / (dc - dn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

std::vector<Point2> clip_convex(std::span<const Point2> subject, std::span<const Point2> clip) {
  std::vector<Point2> out(subject.begin(), subject.end());
  double scale = 1.0;
  for (const auto& v : clip) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  for (std::size_t i = 0, n = clip.size(); i < n && !out.empty(); ++i) {
    const Point2& e0 = clip[i];
    const Point2& e1 = clip[(i + 1) % n];
    // A near-zero edge has an arbitrary direction; its neighbours bound the region.
    if ((e1 - e0).cwiseAbs().maxCoeff() <= 1e-12 * scale) continue;
    // Left of the directed edge e0 -> e1 is inside for a CCW clip polygon.
    const double a = -(e1.y() - e0.y());
    const double b = e1.x() - e0.x();
    const double c = -(a * e0.x() + b * e0.y());
    out = clip_half_plane(out, a, b, c);
  }
  return out;
}

std::vector<Point2> canonicalize(std::vector<Point2> p) {
  double scale = 0.0;
  for (const auto& v : p) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * std::max(1.0, scale);
  std::vector<Point2> out;
  out.reserve(p.size());
  for (const auto& v : p)
    if (out.empty() || (v - out.back()).cwiseAbs().maxCoeff() > tol) out.push_back(v);
  while (out.size() > 1 && (out.front() - out.back()).cwiseAbs().maxCoeff() <= tol)
    out.pop_back();
  if (out.size() >= 3 && signed_area(out) < 0) std::reverse(out.begin(), out.end());
  return out;
}

bool contains_convex(std::span<const Point2> ccw, const Point2& q) {
  const std::size_t n = ccw.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 e = ccw[(i + 1) % n] - ccw[i];
    const Point2 d = q - ccw[i];
    if (e.x() * d.y() - e.y() * d.x() < 0) return false;
  }
  return true;
}

}  // namespace poly

}  // namespace fieldcal
