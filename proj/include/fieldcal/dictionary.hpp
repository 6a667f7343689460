#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fieldcal/field_model.hpp"
#include "fieldcal/geometry.hpp"
#include "fieldcal/raster.hpp"

namespace fieldcal {

using ChartVector = Eigen::Matrix<double, 8, 1>;

/// The eight entries of H / h22 other than h22 itself, row-major.
/// Throws NumericalError when |h22| <= 1e-6 after normalization.
ChartVector homography_to_vector(const Homography& h);
Homography vector_to_homography(const ChartVector& v);

/// Diagonal-covariance Gaussian mixture.
struct GmmModel {
  int k = 0;
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::VectorXd> variances;
  double log_likelihood = 0.0;
  double bic = 0.0;
  /// Total log-likelihood after every EM iteration of the accepted run.
  std::vector<double> log_likelihood_trace;
};

struct GmmOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;
  double variance_floor = 1e-8;
  int max_reseeds = 3;
};

/// One EM run for a fixed mode count (k-means++ seeding). Throws
/// NumericalError if a component stays empty after max_reseeds reseeds.
GmmModel run_em(std::span<const Eigen::VectorXd> samples, int k, std::uint64_t seed,
                const GmmOptions& opts = {});

/// Fits every K in [k_min, k_max] and keeps the lowest-BIC model. K values
/// whose EM collapses are skipped; if none survives, NumericalError.
GmmModel fit_gmm(std::span<const Eigen::VectorXd> samples, int k_min, int k_max,
                 std::uint64_t seed, const GmmOptions& opts = {});

struct DescriptorSpec {
  int grid = 28;
  int channels = kZoneCount + 1;

  int size() const { return grid * grid * channels; }
  friend bool operator==(const DescriptorSpec&, const DescriptorSpec&) = default;
};

/// Majority-vote downsample to grid x grid, one-hot per cell, scaled by
/// 1/sqrt(dimension).
std::vector<float> descriptor_of(const ZoneSegmentation& seg, const DescriptorSpec& spec = {});

double descriptor_distance(std::span<const float> a, std::span<const float> b);

struct TemplateEntry {
  Homography homography;
  ZoneSegmentation tmpl;
  std::vector<float> descriptor;
};

struct TemplateDictionary {
  std::vector<TemplateEntry> entries;
  ImageFrame frame{960, 540};
  DescriptorSpec descriptor_spec;
  std::uint64_t seed = 0;
  int k_min = 1;
  int k_max = 1;

  std::size_t size() const { return entries.size(); }
};

/// Creates an entry: renders the template and its descriptor.
TemplateEntry make_template_entry(const Homography& h, const ImageFrame& frame,
                                  const FieldModel& field, const DescriptorSpec& spec);

TemplateDictionary build_dictionary(std::span<const Homography> train, const ImageFrame& frame,
                                    const FieldModel& field, int k_min, int k_max,
                                    std::uint64_t seed, const GmmOptions& opts = {});

}  // namespace fieldcal
