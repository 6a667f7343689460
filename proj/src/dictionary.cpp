#include "fieldcal/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "fieldcal/errors.hpp"
#include "fieldcal/random.hpp"

namespace fieldcal {

ChartVector homography_to_vector(const Homography& h) {
  const Eigen::Matrix3d& m = h.matrix();
  if (!(std::abs(m(2, 2)) > 1e-6))
    throw NumericalError("homography has h22 ~ 0; outside the clustering chart");
  const Eigen::Matrix3d g = m / m(2, 2);
  ChartVector v;
  v << g(0, 0), g(0, 1), g(0, 2), g(1, 0), g(1, 1), g(1, 2), g(2, 0), g(2, 1);
  return v;
}

Homography vector_to_homography(const ChartVector& v) {
  Eigen::Matrix3d m;
  m << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), 1.0;
  return Homography(m);
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)
constexpr double kEmptyComponent = 1e-6;

struct Standardized {
  Eigen::MatrixXd x;  // n x d
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;
};

Standardized standardize(std::span<const Eigen::VectorXd> samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  const auto d = samples.front().size();
  Standardized s;
  s.x.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (samples[i].size() != d) throw std::invalid_argument("GMM samples differ in dimension");
    s.x.row(i) = samples[i].transpose();
  }
  s.offset = s.x.colwise().mean().transpose();
  s.x.rowwise() -= s.offset.transpose();
  s.scale = (s.x.array().square().colwise().sum() / static_cast<double>(n)).sqrt().transpose();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(s.scale(j) > 0)) s.scale(j) = 1.0;
    s.x.col(j) /= s.scale(j);
  }
  return s;
}

// k-means++ seeding: D^2-weighted draws; uniform when all distances vanish.
Eigen::MatrixXd kmeanspp(const Eigen::MatrixXd& x, int k, Rng& rng) {
  const auto n = x.rows();
  Eigen::MatrixXd centers(k, x.cols());
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng.index(n)));
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      double target = rng.uniform() * total;
      for (pick = 0; pick < n - 1; ++pick) {
        target -= d2(pick);
        if (target < 0) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(n));
    }
    centers.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

GmmModel run_em(std::span<const Eigen::VectorXd> samples, int k, std::uint64_t seed,
                const GmmOptions& opts) {
  if (samples.empty()) throw std::invalid_argument("GMM: empty samples");
  if (k < 1 || static_cast<std::size_t>(k) > samples.size())
    throw std::invalid_argument("GMM: mode count out of range");

  const Standardized s = standardize(samples);
  const Eigen::MatrixXd& x = s.x;
  const auto n = x.rows();
  const auto d = x.cols();
  // Variance floor expressed in standardized units.
  const Eigen::RowVectorXd floor_std =
      (opts.variance_floor / s.scale.array().square()).matrix().transpose();

  Rng rng(seed);
  Eigen::MatrixXd mean = kmeanspp(x, k, rng);
  Eigen::MatrixXd var(k, d);
  var.rowwise() = Eigen::RowVectorXd::Ones(d).cwiseMax(floor_std);
  Eigen::VectorXd weight = Eigen::VectorXd::Constant(k, 1.0 / k);

  Eigen::MatrixXd logp(n, k);
  Eigen::VectorXd point_ll(n);
  std::vector<double> trace;
  int reseeds = 0;

  for (int it = 0;; ++it) {
    // E-step.
    for (int c = 0; c < k; ++c) {
      const double log_norm = std::log(weight(c)) - 0.5 * (d * kLog2Pi + var.row(c).array().log().sum());
      const Eigen::ArrayXXd diff = x.rowwise() - mean.row(c);
      logp.col(c) = (log_norm - 0.5 * (diff.square().rowwise() / var.row(c).array()).rowwise().sum())
                        .matrix();
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = logp.row(i).maxCoeff();
      point_ll(i) = m + std::log((logp.row(i).array() - m).exp().sum());
    }
    const double ll = point_ll.sum();
    trace.push_back(ll);
    const bool converged =
        trace.size() >= 2 && std::abs(trace.back() - trace[trace.size() - 2]) < opts.tolerance;
    if (converged || it >= opts.max_iterations) break;

    // M-step.
    const Eigen::MatrixXd resp = (logp.colwise() - point_ll).array().exp();
    const Eigen::VectorXd nk = resp.colwise().sum().transpose();
    int empty = -1;
    for (int c = 0; c < k; ++c)
      if (nk(c) < kEmptyComponent) {
        empty = c;
        break;
      }
    if (empty >= 0) {
      if (++reseeds > opts.max_reseeds)
        throw NumericalError("GMM: component collapsed after " +
                             std::to_string(opts.max_reseeds) + " reseeds");
      // Reseed at the worst-explained sample and restart the run.
      Eigen::Index far = 0;
      point_ll.minCoeff(&far);
      mean.row(empty) = x.row(far);
      var.row(empty) = Eigen::RowVectorXd::Ones(d).cwiseMax(floor_std);
      weight.setConstant(1.0 / k);
      trace.clear();
      it = -1;
      continue;
    }
    weight = nk / static_cast<double>(n);
    for (int c = 0; c < k; ++c) {
      mean.row(c) = (resp.col(c).transpose() * x) / nk(c);
      const Eigen::ArrayXXd diff = x.rowwise() - mean.row(c);
      var.row(c) = ((diff.square().colwise() * resp.col(c).array()).colwise().sum() / nk(c))
                       .matrix()
                       .cwiseMax(floor_std);
    }
  }

  GmmModel model;
  model.k = k;
  const double log_jacobian = s.scale.array().log().sum() * static_cast<double>(n);
  for (int c = 0; c < k; ++c) {
    model.weights.push_back(weight(c));
    model.means.emplace_back(mean.row(c).transpose().cwiseProduct(s.scale) + s.offset);
    Eigen::VectorXd v = var.row(c).transpose().cwiseProduct(s.scale.cwiseAbs2());
    model.variances.emplace_back(v.cwiseMax(opts.variance_floor));
  }
  for (double& t : trace) t -= log_jacobian;
  model.log_likelihood = trace.back();
  model.log_likelihood_trace = std::move(trace);
  const double params = (k - 1) + 2.0 * k * static_cast<double>(d);
  model.bic = -2.0 * model.log_likelihood + params * std::log(static_cast<double>(n));
  return model;
}

GmmModel fit_gmm(std::span<const Eigen::VectorXd> samples, int k_min, int k_max,
                 std::uint64_t seed, const GmmOptions& opts) {
  if (samples.empty()) throw std::invalid_argument("GMM: empty samples");
  if (k_min < 1 || k_max < k_min) throw std::invalid_argument("GMM: invalid mode range");
  if (samples.size() < 2 * static_cast<std::size_t>(k_max))
    throw std::invalid_argument("GMM: need at least 2*k_max samples");

  std::optional<GmmModel> best;
  std::string last_error;
  for (int k = k_min; k <= k_max; ++k) {
    try {
      GmmModel m = run_em(samples, k, seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(k),
                          opts);
      if (!best || m.bic < best->bic) best = std::move(m);
    } catch (const NumericalError& e) {
      last_error = e.what();
    }
  }
  if (!best) throw NumericalError("GMM: no mode count could be fitted (" + last_error + ")");
  return std::move(*best);
}

std::vector<float> descriptor_of(const ZoneSegmentation& seg, const DescriptorSpec& spec) {
  const int g = spec.grid;
  const int ch = spec.channels;
  std::vector<int> counts(std::size_t(g) * g * ch, 0);
  for (int y = 0; y < seg.height_px; ++y) {
    const int cy = static_cast<int>(static_cast<long long>(y) * g / seg.height_px);
    for (int x = 0; x < seg.width_px; ++x) {
      const int cx = static_cast<int>(static_cast<long long>(x) * g / seg.width_px);
      const int label = seg.at(x, y);
      if (label >= ch) throw std::invalid_argument("segmentation label exceeds descriptor channels");
      ++counts[(std::size_t(cy) * g + cx) * ch + label];
    }
  }
  const float value = static_cast<float>(1.0 / std::sqrt(static_cast<double>(spec.size())));
  std::vector<float> out(spec.size(), 0.0f);
  for (int cell = 0; cell < g * g; ++cell) {
    const int* c = &counts[std::size_t(cell) * ch];
    const int best = static_cast<int>(std::max_element(c, c + ch) - c);  // first max wins
    out[std::size_t(cell) * ch + best] = value;
  }
  return out;
}

double descriptor_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("descriptor length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

TemplateEntry make_template_entry(const Homography& h, const ImageFrame& frame,
                                  const FieldModel& field, const DescriptorSpec& spec) {
  TemplateEntry e{h, render_zone_segmentation(h, frame, field), {}};
  e.descriptor = descriptor_of(e.tmpl, spec);
  return e;
}

TemplateDictionary build_dictionary(std::span<const Homography> train, const ImageFrame& frame,
                                    const FieldModel& field, int k_min, int k_max,
                                    std::uint64_t seed, const GmmOptions& opts) {
  if (train.empty()) throw std::invalid_argument("dictionary: empty training set");
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(train.size());
  for (const auto& h : train) samples.emplace_back(homography_to_vector(h));
  // A training set smaller than 2*k_max cannot support the upper modes.
  const int k_hi = std::max(k_min, std::min<int>(k_max, static_cast<int>(samples.size() / 2)));
  const GmmModel gmm = samples.size() < 2 * static_cast<std::size_t>(k_min)
                           ? run_em(samples, 1, seed, opts)
                           : fit_gmm(samples, k_min, k_hi, seed, opts);

  TemplateDictionary dict;
  dict.frame = frame;
  dict.seed = seed;
  dict.k_min = k_min;
  dict.k_max = k_max;
  for (const auto& m : gmm.means) {
    const ChartVector v = m;
    dict.entries.push_back(make_template_entry(vector_to_homography(v), frame, field,
                                               dict.descriptor_spec));
  }
  return dict;
}

}  // namespace fieldcal
