#pragma once

// Random valid records for round-trip testing.

#include <cmath>
#include <cstdint>
#include <string>

#include "fieldcal/io.hpp"
#include "fieldcal/random.hpp"

namespace fieldcal::test {

// Printable ASCII plus a few characters that need escaping.
inline std::string random_id(Rng& rng) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 _-/.\"\\\t";
  std::string s(rng.index(12), ' ');
  for (auto& c : s) c = alphabet[rng.index(alphabet.size())];
  return s;
}

inline double random_double(Rng& rng) {
  switch (rng.index(4)) {
    case 0: return rng.uniform(-1, 1);
    case 1: return rng.normal() * 1e6;
    case 2: return std::ldexp(rng.uniform(-1, 1), int(rng.index(200)) - 100);
    default: return double(std::int64_t(rng.index(2001)) - 1000);
  }
}

inline io::FrameKey random_key(Rng& rng) {
  return {random_id(rng), 1 + int(rng.index(2)), std::int64_t(rng.index(1u << 20))};
}

inline Homography random_homography(Rng& rng) {
  for (;;) {
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = rng.normal();
    if (auto h = Homography::try_make(m)) return *h;
  }
}

inline Rgb random_color(Rng& rng) {
  return {std::uint8_t(rng.index(256)), std::uint8_t(rng.index(256)), std::uint8_t(rng.index(256))};
}

inline PlayerLocalization random_player(Rng& rng) {
  return {Point2(random_double(rng), random_double(rng)), random_color(rng),
          std::abs(random_double(rng))};
}

inline Detection random_detection(Rng& rng) {
  Detection d;
  const double x = rng.uniform(-50, 1000), y = rng.uniform(-50, 600);
  d.bbox = {x, y, x + rng.uniform(0.01, 40), y + rng.uniform(0.01, 60)};
  if (rng.index(2)) d.mean_color = random_color(rng);
  if (rng.index(2)) {
    const auto [w, h] = mask_extent(d.bbox);
    d.mask_width = w;
    d.mask_height = h;
    d.mask.resize(std::size_t(w) * h);
    const double p = rng.uniform();
    for (auto& v : d.mask) v = rng.uniform() < p;
  }
  return d;
}

template <typename T>
T random_action(Rng& rng) {
  T a;
  a.label = static_cast<ActionClass>(rng.index(kActionClassCount));
  a.time_s = double(rng.index(3'000'000)) / 1000.0;
  a.half = 1 + int(rng.index(2));
  a.game_id = random_id(rng);
  return a;
}

inline io::CalibrationDocument random_calibration(Rng& rng) {
  io::CalibrationDocument doc;
  doc.frame = {1 + int(rng.index(4000)), 1 + int(rng.index(4000))};
  if (rng.index(2)) {
    CalibrationOptions o;
    o.sample_count = 1 + int(rng.index(5000));
    o.sample_seed = rng.next() >> 1;
    o.max_iterations = int(rng.index(500));
    o.huber_px = rng.uniform(0, 5);
    o.truncate_px = rng.uniform(0, 50);
    o.residual_max_px = rng.uniform(0, 10);
    doc.options = o;
  }
  for (std::size_t k = rng.index(4); k > 0; --k) {
    io::FrameRecord r;
    r.key = random_key(rng);
    r.homography = random_homography(rng);
    r.relevance = int(rng.index(2));
    r.residual = rng.index(5) == 0 ? std::numeric_limits<double>::infinity()
                                   : std::abs(random_double(rng));
    r.template_index = int(rng.index(100));
    doc.frames.push_back(r);
  }
  return doc;
}

inline std::vector<io::DetectionFrame> random_detection_frames(Rng& rng) {
  std::vector<io::DetectionFrame> frames(rng.index(3));
  for (auto& f : frames) {
    f.key = random_key(rng);
    for (std::size_t k = rng.index(4); k > 0; --k) f.detections.push_back(random_detection(rng));
  }
  return frames;
}

/// Localizations and graphs over the same players.
inline std::pair<std::vector<io::LocalizationFrame>, std::vector<io::GraphFrame>>
random_player_frames(Rng& rng) {
  std::vector<io::LocalizationFrame> locs(rng.index(3));
  std::vector<io::GraphFrame> graphs(locs.size());
  for (std::size_t k = 0; k < locs.size(); ++k) {
    locs[k].key = graphs[k].key = random_key(rng);
    for (std::size_t n = rng.index(6); n > 0; --n) locs[k].players.push_back(random_player(rng));
    graphs[k].graph.nodes = locs[k].players;
    const int n = int(locs[k].players.size());
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (rng.index(2)) graphs[k].graph.edges.emplace_back(a, b);
  }
  return {std::move(locs), std::move(graphs)};
}

inline bool same_graph(const PlayerGraph& a, const PlayerGraph& b) {
  return a.nodes == b.nodes && a.edges == b.edges;
}

}  // namespace fieldcal::test
