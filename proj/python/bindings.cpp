#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstring>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "fieldcal/calibrate.hpp"
#include "fieldcal/dictionary.hpp"
#include "fieldcal/errors.hpp"
#include "fieldcal/eval.hpp"
#include "fieldcal/field_model.hpp"
#include "fieldcal/geometry.hpp"
#include "fieldcal/io.hpp"
#include "fieldcal/localization.hpp"
#include "fieldcal/pipeline.hpp"
#include "fieldcal/raster.hpp"
#include "fieldcal/synth.hpp"

namespace py = pybind11;
using namespace fieldcal;

namespace {

using Array2 = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

const FieldModel& field() {
  static const FieldModel f = standard_field();
  return f;
}

ImageFrame to_frame(const std::pair<int, int>& wh) { return {wh.first, wh.second}; }

std::vector<Point2> to_points(const Array2& a) {
  if (a.ndim() != 2 || a.shape(1) != 2) throw std::invalid_argument("expected an (N, 2) array");
  std::vector<Point2> out;
  out.reserve(a.shape(0));
  const auto r = a.unchecked<2>();
  for (py::ssize_t i = 0; i < r.shape(0); ++i) out.emplace_back(r(i, 0), r(i, 1));
  return out;
}

Array2 from_points(const std::vector<Point2>& pts) {
  Array2 out({py::ssize_t(pts.size()), py::ssize_t(2)});
  auto w = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    w(i, 0) = pts[i].x();
    w(i, 1) = pts[i].y();
  }
  return out;
}

ZoneSegmentation to_segmentation(const LabelArray& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected an (H, W) label array");
  ZoneSegmentation s(int(a.shape(1)), int(a.shape(0)));
  std::memcpy(s.labels.data(), a.data(), s.labels.size());
  return s;
}

LabelArray from_segmentation(const ZoneSegmentation& s) {
  LabelArray out({py::ssize_t(s.height_px), py::ssize_t(s.width_px)});
  std::memcpy(out.mutable_data(), s.labels.data(), s.labels.size());
  return out;
}

py::array_t<std::uint8_t> from_topview(const TopViewImage& img) {
  py::array_t<std::uint8_t> out({py::ssize_t(img.size_px), py::ssize_t(img.size_px), py::ssize_t(3)});
  std::memcpy(out.mutable_data(), img.data.data(), img.data.size());
  return out;
}

ActionClass label_of(const std::string& s) {
  const auto c = parse_action_label(s);
  if (!c) throw std::invalid_argument("unknown action label \"" + s + "\"");
  return *c;
}

std::vector<Detection> to_detections(const Array2& boxes) {
  if (boxes.ndim() != 2 || boxes.shape(1) != 4)
    throw std::invalid_argument("expected an (N, 4) array of x1, y1, x2, y2");
  std::vector<Detection> out;
  const auto r = boxes.unchecked<2>();
  for (py::ssize_t i = 0; i < r.shape(0); ++i) {
    Detection d;
    d.bbox = {r(i, 0), r(i, 1), r(i, 2), r(i, 3)};
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Broadcast soccer field calibration, player localization and evaluation";
#ifdef VERSION_INFO
#define FIELDCAL_STR(x) #x
#define FIELDCAL_XSTR(x) FIELDCAL_STR(x)
  m.attr("__version__") = FIELDCAL_XSTR(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.attr("FIELD_LENGTH") = kFieldLength;
  m.attr("FIELD_WIDTH") = kFieldWidth;
  m.attr("ZONE_COUNT") = kZoneCount;

  m.def("zone_at", [](double x, double y) { return field().zone_at(Point2(x, y)); },
        py::arg("x"), py::arg("y"), "Zone id (1-16) of a field point, None off the field.");

  py::class_<Homography>(m, "Homography")
      .def(py::init([](const Eigen::Matrix3d& m) { return Homography(m); }), py::arg("matrix"))
      .def_property_readonly("matrix", &Homography::matrix)
      .def("inverse", &Homography::inverse)
      .def("__eq__", [](const Homography& a, const Homography& b) { return a == b; })
      .def("__repr__", [](const Homography& h) {
        std::string s = "Homography([";
        for (int i = 0; i < 9; ++i) s += (i ? ", " : "") + std::to_string(h(i / 3, i % 3));
        return s + "])";
      });

  m.def("project",
        [](const Homography& h, double x, double y) -> std::optional<std::pair<double, double>> {
          const auto q = project(h, Point2(x, y));
          if (!q) return std::nullopt;
          return std::make_pair(q->x(), q->y());
        },
        py::arg("h"), py::arg("x"), py::arg("y"), "Field point (m) to image pixel.");
  m.def("unproject",
        [](const Homography& h, double u, double v) -> std::optional<std::pair<double, double>> {
          const auto q = unproject(h, Point2(u, v));
          if (!q) return std::nullopt;
          return std::make_pair(q->x(), q->y());
        },
        py::arg("h"), py::arg("u"), py::arg("v"), "Image pixel to field point (m).");
  m.def("compose", &compose, py::arg("a"), py::arg("b"));
  m.def("estimate_dlt",
        [](const Array2& field_pts, const Array2& image_pts) {
          const auto f = to_points(field_pts), i = to_points(image_pts);
          if (f.size() != i.size()) throw std::invalid_argument("point counts differ");
          std::vector<Correspondence> pairs;
          for (std::size_t k = 0; k < f.size(); ++k) pairs.push_back({f[k], i[k]});
          return estimate_dlt(pairs);
        },
        py::arg("field_points"), py::arg("image_points"));
  m.def("visible_field_polygon",
        [](const Homography& h, std::pair<int, int> frame) {
          return from_points(visible_field_polygon(h, to_frame(frame), field()).vertices);
        },
        py::arg("h"), py::arg("frame") = std::make_pair(960, 540),
        "Counter-clockwise vertices (m) of the field area seen by the camera.");

  m.def("render_zone_segmentation",
        [](const Homography& h, std::pair<int, int> frame) {
          return from_segmentation(render_zone_segmentation(h, to_frame(frame), field()));
        },
        py::arg("h"), py::arg("frame") = std::make_pair(960, 540));

  py::class_<CalibrationOptions>(m, "CalibrationOptions")
      .def(py::init<>())
      .def_readwrite("sample_count", &CalibrationOptions::sample_count)
      .def_readwrite("sample_seed", &CalibrationOptions::sample_seed)
      .def_readwrite("max_iterations", &CalibrationOptions::max_iterations)
      .def_readwrite("huber_px", &CalibrationOptions::huber_px)
      .def_readwrite("truncate_px", &CalibrationOptions::truncate_px)
      .def_readwrite("residual_max_px", &CalibrationOptions::residual_max_px)
      .def_readwrite("min_visible_area_m2", &CalibrationOptions::min_visible_area_m2);

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("homography", &CalibrationResult::homography)
      .def_readonly("relevance", &CalibrationResult::relevance)
      .def_readonly("residual", &CalibrationResult::residual)
      .def_readonly("template_index", &CalibrationResult::template_index);

  py::class_<TemplateDictionary>(m, "TemplateDictionary")
      .def("__len__", &TemplateDictionary::size)
      .def_property_readonly("homographies",
                             [](const TemplateDictionary& d) {
                               std::vector<Homography> out;
                               for (const auto& e : d.entries) out.push_back(e.homography);
                               return out;
                             })
      .def_property_readonly("frame", [](const TemplateDictionary& d) {
        return std::make_pair(d.frame.width_px, d.frame.height_px);
      });

  m.def("build_dictionary",
        [](const std::vector<Homography>& train, std::pair<int, int> frame, int k_min, int k_max,
           std::uint64_t seed) {
          py::gil_scoped_release release;
          return build_dictionary(train, to_frame(frame), field(), k_min, k_max, seed);
        },
        py::arg("train"), py::arg("frame") = std::make_pair(960, 540), py::arg("k_min") = 1,
        py::arg("k_max") = 30, py::arg("seed") = 0);
  m.def("read_dictionary", [](const std::string& dir) { return io::read_dictionary(dir); },
        py::arg("path"));
  m.def("write_dictionary",
        [](const std::string& dir, const TemplateDictionary& d) { io::write_dictionary(dir, d); },
        py::arg("path"), py::arg("dictionary"));

  m.def("calibrate_frame",
        [](const LabelArray& seg, const TemplateDictionary& dict, const CalibrationOptions& opts) {
          const ZoneSegmentation s = to_segmentation(seg);
          py::gil_scoped_release release;
          return calibrate_frame(s, dict, field(), opts);
        },
        py::arg("segmentation"), py::arg("dictionary"), py::arg("options") = CalibrationOptions{});
  m.def("calibrate_batch",
        [](const std::vector<LabelArray>& segs, const TemplateDictionary& dict,
           const CalibrationOptions& opts, int threads) {
          std::vector<ZoneSegmentation> s;
          for (const auto& a : segs) s.push_back(to_segmentation(a));
          py::gil_scoped_release release;
          return calibrate_batch(s, dict, field(), opts, threads);
        },
        py::arg("segmentations"), py::arg("dictionary"), py::arg("options") = CalibrationOptions{},
        py::arg("threads") = 0);

  m.def("iou_pair",
        [](const Homography& gt, const Homography& pred, std::pair<int, int> frame) {
          const auto r = iou_pair(gt, pred, to_frame(frame), field());
          return std::make_pair(r.entire, r.part);
        },
        py::arg("gt"), py::arg("pred"), py::arg("frame") = std::make_pair(960, 540),
        "(entire, part) IoU of the top-view projections; None where undefined.");

  py::class_<PlayerLocalization>(m, "PlayerLocalization")
      .def(py::init([](double x, double y, Rgb color, double area) {
             return PlayerLocalization{Point2(x, y), color, area};
           }),
           py::arg("x"), py::arg("y"), py::arg("color") = Rgb{128, 128, 128},
           py::arg("bbox_area_px") = 0.0)
      .def_property_readonly("position",
                             [](const PlayerLocalization& p) {
                               return std::make_pair(p.position.x(), p.position.y());
                             })
      .def_readonly("color", &PlayerLocalization::color)
      .def_readonly("bbox_area_px", &PlayerLocalization::bbox_area_px);

  m.def("localize",
        [](const Array2& boxes, const Homography& h, std::pair<int, int> frame) {
          const CalibrationResult calib{h, 1, 0.0, 0};
          return localize(to_detections(boxes), calib, to_frame(frame), field());
        },
        py::arg("boxes"), py::arg("h"), py::arg("frame") = std::make_pair(960, 540),
        "Field positions of (N, 4) image boxes; boxes off the visible field are dropped.");
  m.def("build_player_graph",
        [](const std::vector<PlayerLocalization>& players) {
          return build_player_graph(players).edges;
        },
        py::arg("players"), "Edges (i, j), i < j, between players closer than 25 m.");
  m.def("render_topview",
        [](const std::vector<PlayerLocalization>& players, const std::optional<Homography>& h,
           const std::string& mode, std::pair<int, int> frame) {
          const auto spec = TopViewSpec::for_field(field());
          VisiblePolygon poly;
          if (h) poly = visible_field_polygon(*h, to_frame(frame), field());
          if (mode == "cc") return from_topview(render_color_composition(spec, players, poly, field()));
          if (mode == "bc") return from_topview(render_binary_channels(spec, players, poly, field()));
          throw std::invalid_argument("mode must be \"cc\" or \"bc\"");
        },
        py::arg("players"), py::arg("h") = std::nullopt, py::arg("mode") = "cc",
        py::arg("frame") = std::make_pair(960, 540), "224 x 224 x 3 uint8 top view.");

  m.def("action_labels", [] {
    std::vector<std::string> out;
    for (int c = 0; c < kActionClassCount; ++c)
      out.emplace_back(action_label(static_cast<ActionClass>(c)));
    return out;
  });
  m.def("frame_time", &frame_time, py::arg("frame_index"));
  m.def("average_map",
        [](const std::vector<std::tuple<std::string, double, int, std::string, double>>& preds,
           const std::vector<std::tuple<std::string, double, int, std::string>>& gts,
           std::optional<std::vector<double>> margins) {
          std::vector<SpottingPrediction> p;
          for (const auto& [l, t, h, g, c] : preds) p.push_back({label_of(l), t, h, g, c});
          std::vector<GroundTruthAction> a;
          for (const auto& [l, t, h, g] : gts) a.push_back({label_of(l), t, h, g});
          const auto r = average_map(p, a, margins.value_or(default_margins()));
          py::dict ap;
          for (int c = 0; c < kActionClassCount; ++c)
            if (r.class_average_ap[c])
              ap[py::str(std::string(action_label(static_cast<ActionClass>(c))))] =
                  *r.class_average_ap[c];
          py::dict out;
          out["average_map"] = r.average_map;
          out["map_per_margin"] = r.map_per_margin;
          out["margins"] = r.margins;
          out["ap"] = ap;
          return out;
        },
        py::arg("predictions"), py::arg("ground_truth"), py::arg("margins") = std::nullopt,
        "predictions: (label, time_s, half, game_id, confidence); ground_truth: (label, time_s, "
        "half, game_id).");

  m.def("generate_scene",
        [](std::uint64_t seed, int players, double label_noise, double box_noise_px,
           std::pair<int, int> frame) {
          SceneParams p;
          p.frame = to_frame(frame);
          p.players = players;
          p.label_noise = label_noise;
          p.box_noise_px = box_noise_px;
          const auto s = generate_scene(p, seed, field());
          Array2 boxes({py::ssize_t(s.detections.size()), py::ssize_t(4)});
          auto w = boxes.mutable_unchecked<2>();
          for (std::size_t i = 0; i < s.detections.size(); ++i) {
            const auto& b = s.detections[i].bbox;
            w(i, 0) = b.x1;
            w(i, 1) = b.y1;
            w(i, 2) = b.x2;
            w(i, 3) = b.y2;
          }
          py::dict out;
          out["truth"] = s.truth;
          out["segmentation"] = from_segmentation(s.segmentation);
          out["players"] = from_points(s.players);
          out["boxes"] = boxes;
          out["box_player"] = s.detection_player;
          return out;
        },
        py::arg("seed"), py::arg("players") = 22, py::arg("label_noise") = 0.0,
        py::arg("box_noise_px") = 0.0, py::arg("frame") = std::make_pair(960, 540));
  m.def("sample_homographies",
        [](int count, std::uint64_t seed, std::pair<int, int> frame) {
          SceneParams p;
          p.frame = to_frame(frame);
          return sample_homographies(p, count, seed, field());
        },
        py::arg("count"), py::arg("seed") = 0, py::arg("frame") = std::make_pair(960, 540));
}
