#pragma once

// Shared fixtures for the test binaries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "fieldcal/geometry.hpp"

namespace fieldcal::test {

// Broadcast-like cameras (960x540) shared with tests/oracle/make_oracles.py.
inline const double kCam[3][9] = {
    {0.015377501451566369, 0.013956104989754033, 0.93539436339705839, -8.4261082961968785e-06,
     2.6963546547829366e-05, 0.35299391591479978, -5.4274233606996102e-06,
     1.7367754754238754e-05, 0.0011994605627146139},
    {0.064661118417183083, 0.0013591215529495332, -0.16850370739498216, 0.00036547149579859594,
     0.00099408246857218027, 0.98357228024602494, 1.6957081368972517e-05,
     4.6123261323605251e-05, 0.002835224004892205},
    {0.022899522494141185, 0.0089540413720328241, 0.88134385744893717, 3.0984795500121735e-05,
     0.00025175146343848836, 0.47183143577337722, 2.9735325605629249e-06,
     2.4159952054573765e-05, 0.001863661532332813},
};

inline Eigen::Matrix3d row_major(const double* v) {
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = v[i];
  return m;
}

inline Homography camera(int i) { return Homography(row_major(kCam[i])); }

inline const ImageFrame kFrame{960, 540};

/// Top-down camera: 1 px per `px_per_m` meters, field centered in a frame
/// of (105 + 2 * margin) x (68 + 2 * margin) meters.
inline Homography top_down(double px_per_m, double margin_m = 0.0) {
  Eigen::Matrix3d m;
  m << px_per_m, 0, (52.5 + margin_m) * px_per_m, 0, px_per_m, (34.0 + margin_m) * px_per_m, 0,
      0, 1;
  return Homography(m);
}

/// splitmix64 stream with Box-Muller normals; mirrored in the oracle script.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

/// Three unit-variance clusters in 8-D, 100 samples each, centers 12 sigma
/// apart along the first two axes.
inline std::vector<Eigen::VectorXd> three_clusters(std::uint64_t seed = 42,
                                                   std::vector<Eigen::VectorXd>* centers = nullptr) {
  std::vector<Eigen::VectorXd> c(3, Eigen::VectorXd::Zero(8));
  c[1](0) = 12.0;
  c[2](1) = 12.0;
  SplitMix g(seed);
  std::vector<Eigen::VectorXd> x;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd v = c[k];
      for (int d = 0; d < 8; ++d) v(d) += g.normal();
      x.push_back(v);
    }
  if (centers) *centers = c;
  return x;
}

}  // namespace fieldcal::test
