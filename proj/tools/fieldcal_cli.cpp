// fieldcal command-line tool.
//
// Exit status: 0 success, 2 input-format error, 3 numerical failure,
// 4 I/O failure, 1 anything else.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fieldcal/calibrate.hpp"
#include "fieldcal/dictionary.hpp"
#include "fieldcal/errors.hpp"
#include "fieldcal/eval.hpp"
#include "fieldcal/field_model.hpp"
#include "fieldcal/io.hpp"
#include "fieldcal/localization.hpp"
#include "fieldcal/pipeline.hpp"
#include "fieldcal/png_io.hpp"
#include "fieldcal/raster.hpp"
#include "fieldcal/synth.hpp"

namespace fs = std::filesystem;
using namespace fieldcal;

namespace {

ImageFrame parse_frame_arg(const std::string& s) {
  int w = 0, h = 0;
  char x = 0, extra = 0;
  if (std::sscanf(s.c_str(), "%d%c%d%c", &w, &x, &h, &extra) != 3 || (x != 'x' && x != 'X') ||
      w < 1 || h < 1)
    throw FormatError("--frame: expected WxH, got \"" + s + "\"");
  return {w, h};
}

std::vector<double> parse_margins_arg(const std::string& s) {
  double a = 0, b = 0, step = 0;
  char c1 = 0, c2 = 0, extra = 0;
  std::vector<double> out;
  if (std::sscanf(s.c_str(), "%lf%c%lf%c%lf%c", &a, &c1, &b, &c2, &step, &extra) == 5 &&
      c1 == ':' && c2 == ':') {
    if (!(step > 0) || b < a) throw FormatError("--margins: empty range \"" + s + "\"");
    for (int i = 0;; ++i) {
      const double m = a + i * step;
      if (m > b + 1e-9) break;
      out.push_back(m);
    }
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double m = 0;
    try {
      m = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !(m > 0)) throw FormatError("--margins: bad value \"" + item + "\"");
    out.push_back(m);
  }
  if (out.empty()) throw FormatError("--margins: no margins given");
  return out;
}

template <typename Record>
std::map<io::FrameKey, const Record*> index_by_key(const std::vector<Record>& records,
                                                   const std::string& source) {
  std::map<io::FrameKey, const Record*> out;
  for (const auto& r : records)
    if (!out.emplace(r.key, &r).second)
      throw FormatError(source + ": duplicate frame " + io::to_string(r.key));
  return out;
}

CalibrationResult as_result(const io::FrameRecord& r) {
  CalibrationResult c;
  c.homography = r.homography;
  c.relevance = r.relevance;
  c.residual = r.residual;
  c.template_index = r.template_index;
  return c;
}

// ---------------------------------------------------------------------------

struct BuildDictArgs {
  std::string train, out;
  int kmin = 1, kmax = 30;
  std::uint64_t seed = 0;
};

int run_build_dict(const BuildDictArgs& a) {
  const auto doc = io::parse_calibration(io::read_text(a.train), a.train);
  if (doc.frames.empty()) throw FormatError(a.train + ": no training frames");
  if (a.kmin < 1 || a.kmax < a.kmin) throw FormatError("--kmin/--kmax: need 1 <= kmin <= kmax");
  std::vector<Homography> train;
  for (const auto& r : doc.frames) train.push_back(r.homography);
  const FieldModel field = standard_field();
  const auto dict = build_dictionary(train, doc.frame, field, a.kmin, a.kmax, a.seed);
  io::write_dictionary(a.out, dict);
  std::cout << "dictionary: " << dict.size() << " templates from " << train.size()
            << " training frames\n";
  return 0;
}

struct CalibrateArgs {
  std::string dict, segs, out;
  int threads = 1;
};

int run_calibrate(const CalibrateArgs& a) {
  const auto dict = io::read_dictionary(a.dict);
  const auto frames = io::read_segmentations(a.segs);
  std::vector<ZoneSegmentation> segs;
  for (const auto& f : frames) segs.push_back(f.segmentation);
  io::CalibrationDocument doc;
  doc.frame = segs.empty() ? dict.frame : segs.front().frame();
  for (std::size_t i = 0; i < segs.size(); ++i)
    if (segs[i].frame() != doc.frame)
      throw FormatError(a.segs + ": frame " + io::to_string(frames[i].key) +
                        " differs in size from the first segmentation");
  doc.options = CalibrationOptions{};
  const FieldModel field = standard_field();
  const auto results = calibrate_batch(segs, dict, field, *doc.options, a.threads);
  int relevant = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    doc.frames.push_back(
        io::FrameRecord{frames[i].key, r.homography, r.relevance, r.residual, r.template_index});
    relevant += r.relevance;
  }
  io::write_text_atomic(a.out, io::serialize_calibration(doc));
  std::cout << "calibrated " << results.size() << " frames, " << relevant << " relevant\n";
  return 0;
}

struct LocalizeArgs {
  std::string calib, dets, out;
};

int run_localize(const LocalizeArgs& a) {
  const auto calib = io::parse_calibration(io::read_text(a.calib), a.calib);
  const auto dets = io::parse_detections(io::read_text(a.dets), a.dets);
  const auto by_key = index_by_key(calib.frames, a.calib);
  const FieldModel field = standard_field();
  std::vector<io::LocalizationFrame> out;
  int skipped = 0;
  for (const auto& f : dets) {
    const auto it = by_key.find(f.key);
    if (it == by_key.end())
      throw FormatError(a.calib + ": no calibration for frame " + io::to_string(f.key));
    io::LocalizationFrame lf{f.key, {}};
    if (it->second->relevance == 1)
      lf.players = localize(f.detections, as_result(*it->second), calib.frame, field);
    else
      ++skipped;
    out.push_back(std::move(lf));
  }
  io::write_text_atomic(a.out, io::serialize_localizations(out));
  std::cout << "localized " << out.size() << " frames";
  if (skipped) std::cout << " (" << skipped << " uncalibrated, left empty)";
  std::cout << "\n";
  return 0;
}

struct TopViewArgs {
  std::string mode, loc, calib, out, bc_format = "packed";
};

int run_render_topview(const TopViewArgs& a) {
  const auto locs = io::parse_localizations(io::read_text(a.loc), a.loc);
  const auto calib = io::parse_calibration(io::read_text(a.calib), a.calib);
  const auto by_key = index_by_key(calib.frames, a.calib);
  const FieldModel field = standard_field();
  const TopViewSpec spec = TopViewSpec::for_field(field);
  io::StagedDirectory stage(a.out);
  nlohmann::json index_frames = nlohmann::json::array();
  for (std::size_t i = 0; i < locs.size(); ++i) {
    const auto it = by_key.find(locs[i].key);
    if (it == by_key.end())
      throw FormatError(a.calib + ": no calibration for frame " + io::to_string(locs[i].key));
    VisiblePolygon poly;
    if (it->second->relevance == 1)
      poly = visible_field_polygon(it->second->homography, calib.frame, field);
    char stem[32];
    std::snprintf(stem, sizeof stem, "%05zu", i);
    std::vector<std::string> files;
    if (a.mode == "cc") {
      const auto img = render_color_composition(spec, locs[i].players, poly, field);
      files.push_back(std::string(stem) + ".png");
      png::write(stage.path() / files.back(), img.size_px, img.size_px, 3, img.data);
    } else {
      const auto img = render_binary_channels(spec, locs[i].players, poly, field);
      if (a.bc_format == "split") {
        const char* names[3] = {"lines", "polygon", "players"};
        for (int c = 0; c < 3; ++c) {
          std::vector<std::uint8_t> ch(std::size_t(img.size_px) * img.size_px);
          for (std::size_t p = 0; p < ch.size(); ++p) ch[p] = img.data[p * 3 + c];
          files.push_back(std::string(stem) + "_" + names[c] + ".png");
          png::write_bilevel(stage.path() / files.back(), img.size_px, img.size_px, ch);
        }
      } else {
        std::vector<std::uint8_t> scaled(img.data.size());
        for (std::size_t p = 0; p < scaled.size(); ++p) scaled[p] = img.data[p] ? 255 : 0;
        files.push_back(std::string(stem) + ".png");
        png::write(stage.path() / files.back(), img.size_px, img.size_px, 3, scaled);
      }
    }
    index_frames.push_back({{"game_id", locs[i].key.game_id},
                            {"half", locs[i].key.half},
                            {"frame_index", locs[i].key.frame_index},
                            {"files", files}});
  }
  const nlohmann::json index = {{"version", io::kFormatVersion},
                                {"kind", "topviews"},
                                {"mode", a.mode},
                                {"bc_format", a.mode == "bc" ? a.bc_format : "none"},
                                {"frames", std::move(index_frames)}};
  io::write_text_atomic(stage.path() / "index.json", index.dump(1) + "\n");
  stage.commit();
  std::cout << "rendered " << locs.size() << " top views\n";
  return 0;
}

struct GraphArgs {
  std::string loc, out;
};

int run_graph(const GraphArgs& a) {
  const auto locs = io::parse_localizations(io::read_text(a.loc), a.loc);
  std::vector<io::GraphFrame> out;
  std::size_t edges = 0;
  for (const auto& f : locs) {
    out.push_back({f.key, build_player_graph(f.players)});
    edges += out.back().graph.edges.size();
  }
  io::write_text_atomic(a.out, io::serialize_graphs(out));
  std::cout << "graphs: " << out.size() << " frames, " << edges << " edges\n";
  return 0;
}

struct EvalCalibArgs {
  std::string gt, pred, frame, out;
};

int run_eval_calib(const EvalCalibArgs& a) {
  const auto gt = io::parse_calibration(io::read_text(a.gt), a.gt);
  const auto pred = io::parse_calibration(io::read_text(a.pred), a.pred);
  const ImageFrame frame = a.frame.empty() ? gt.frame : parse_frame_arg(a.frame);
  const auto by_key = index_by_key(pred.frames, a.pred);
  const FieldModel field = standard_field();
  std::vector<IoUPair> pairs;
  for (const auto& g : gt.frames) {
    const auto it = by_key.find(g.key);
    if (it == by_key.end())
      throw FormatError(a.pred + ": no prediction for frame " + io::to_string(g.key));
    pairs.push_back(iou_pair(g.homography, it->second->homography, frame, field));
  }
  const IoUReport r = summarize_iou(pairs);
  std::printf("frames %zu\n", pairs.size());
  std::printf("mean_entire %.6f\nmedian_entire %.6f\nundefined_entire %d\n", r.mean_entire,
              r.median_entire, r.undefined_entire);
  std::printf("mean_part %.6f\nmedian_part %.6f\nundefined_part %d\n", r.mean_part, r.median_part,
              r.undefined_part);
  if (!a.out.empty()) io::write_text_atomic(a.out, io::serialize_iou_report(r));
  return 0;
}

struct EvalSpottingArgs {
  std::string gt, pred, margins = "5:60:5", out;
};

int run_eval_spotting(const EvalSpottingArgs& a) {
  const auto gts = io::parse_annotations(io::read_text(a.gt), a.gt);
  const auto preds = io::parse_predictions(io::read_text(a.pred), a.pred);
  const auto margins = parse_margins_arg(a.margins);
  const SpottingReport r = average_map(preds, gts, margins);
  std::printf("%-22s %6s %8s\n", "class", "gt", "AP");
  for (int c = 0; c < kActionClassCount; ++c) {
    const auto label = action_label(static_cast<ActionClass>(c));
    if (r.class_average_ap[c])
      std::printf("%-22.*s %6d %7.1f%%\n", int(label.size()), label.data(), r.gt_count[c],
                  100.0 * *r.class_average_ap[c]);
    else
      std::printf("%-22.*s %6d %8s\n", int(label.size()), label.data(), r.gt_count[c], "-");
  }
  std::printf("\n%-10s %8s\n", "margin_s", "mAP");
  for (std::size_t m = 0; m < r.margins.size(); ++m)
    std::printf("%-10g %7.1f%%\n", r.margins[m], 100.0 * r.map_per_margin[m]);
  std::printf("\nAverage-mAP: %.1f%%\n", 100.0 * r.average_map);
  if (!a.out.empty()) io::write_text_atomic(a.out, io::serialize_spotting_report(r));
  return 0;
}

struct SynthArgs {
  std::string out, frame = "960x540", game_id = "synth";
  int frames = 10, train = 1000, players = 22, crowd = 0, actions = 40;
  std::uint64_t seed = 0;
  double noise = 0.0, box_noise = 0.0;
};

int run_synth(const SynthArgs& a) {
  if (a.frames < 0 || a.train < 1 || a.players < 0 || a.crowd < 0 || a.actions < 0)
    throw FormatError("synth: counts must be non-negative (train >= 1)");
  if (!(a.noise >= 0 && a.noise <= 1)) throw FormatError("--noise: expected a value in [0, 1]");
  SceneParams params;
  params.frame = parse_frame_arg(a.frame);
  params.players = a.players;
  params.label_noise = a.noise;
  params.box_noise_px = a.box_noise;
  params.crowd_detections = a.crowd;
  const FieldModel field = standard_field();

  // Independent streams for scenes, training poses and actions.
  Rng streams(a.seed);
  const std::uint64_t scene_base = streams.next();
  const std::uint64_t train_seed = streams.next();
  const std::uint64_t action_seed = streams.next();

  io::CalibrationDocument truth, train;
  truth.frame = train.frame = params.frame;
  std::vector<io::SegmentationFrame> segs;
  std::vector<io::DetectionFrame> dets;
  std::vector<io::LocalizationFrame> planted;
  for (int i = 0; i < a.frames; ++i) {
    const io::FrameKey key{a.game_id, 1, i};
    const SyntheticScene s = generate_scene(params, scene_base + std::uint64_t(i), field);
    truth.frames.push_back(io::FrameRecord{key, s.truth, 1, 0.0, 0});
    segs.push_back({key, s.segmentation});
    dets.push_back({key, s.detections});
    io::LocalizationFrame lf{key, {}};
    for (std::size_t d = 0; d < s.detections.size(); ++d) {
      if (s.detection_player[d] < 0) continue;
      PlayerLocalization p;
      p.position = s.players[s.detection_player[d]];
      p.color = s.detections[d].mean_color.value_or(Rgb{128, 128, 128});
      p.bbox_area_px = s.detections[d].bbox.area();
      lf.players.push_back(p);
    }
    planted.push_back(std::move(lf));
  }
  const auto train_h = sample_homographies(params, a.train, train_seed, field);
  for (int i = 0; i < a.train; ++i)
    train.frames.push_back(io::FrameRecord{{a.game_id + "-train", 1, i}, train_h[i], 1, 0.0, 0});

  const auto actions = synth_annotations(a.actions, a.game_id, action_seed);
  Rng jitter(action_seed ^ 0x5bd1e995ULL);
  std::vector<SpottingPrediction> preds;
  for (const auto& g : actions) {
    SpottingPrediction p{g.label, g.time_s, g.half, g.game_id, jitter.uniform()};
    p.time_s = std::max(0.0, std::round((g.time_s + jitter.normal(0.0, 10.0)) * 1000.0) / 1000.0);
    preds.push_back(p);
  }

  io::StagedDirectory stage(a.out);
  io::write_text_atomic(stage.path() / "truth.json", io::serialize_calibration(truth));
  io::write_text_atomic(stage.path() / "train.json", io::serialize_calibration(train));
  io::write_segmentation_files(stage.path() / "segs", segs);
  io::write_text_atomic(stage.path() / "detections.json", io::serialize_detections(dets));
  io::write_text_atomic(stage.path() / "players.json", io::serialize_localizations(planted));
  io::write_text_atomic(stage.path() / "annotations.json", io::serialize_annotations(actions));
  io::write_text_atomic(stage.path() / "predictions.json", io::serialize_predictions(preds));
  io::write_text_atomic(stage.path() / "field.json", io::serialize_field_model(field));
  stage.commit();
  std::cout << "synth: " << a.frames << " frames, " << a.train << " training poses, "
            << actions.size() << " actions -> " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Broadcast soccer field calibration toolkit"};
  app.require_subcommand(1);

  BuildDictArgs bd;
  auto* c_bd = app.add_subcommand("build-dict", "Cluster training calibrations into a template dictionary");
  c_bd->add_option("--train", bd.train, "Calibration file with training homographies")->required();
  c_bd->add_option("--out", bd.out, "Output dictionary directory")->required();
  c_bd->add_option("--kmin", bd.kmin, "Smallest mode count")->capture_default_str();
  c_bd->add_option("--kmax", bd.kmax, "Largest mode count")->capture_default_str();
  c_bd->add_option("--seed", bd.seed, "EM seed")->capture_default_str();

  CalibrateArgs ca;
  auto* c_ca = app.add_subcommand("calibrate", "Calibrate a directory of zone segmentations");
  c_ca->add_option("--dict", ca.dict, "Dictionary directory")->required();
  c_ca->add_option("--segs", ca.segs, "Segmentation directory")->required();
  c_ca->add_option("--out", ca.out, "Output calibration file")->required();
  c_ca->add_option("--threads", ca.threads, "Worker threads (0 = all cores)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  LocalizeArgs lo;
  auto* c_lo = app.add_subcommand("localize", "Place detections on the field plane");
  c_lo->add_option("--calib", lo.calib, "Calibration file")->required();
  c_lo->add_option("--dets", lo.dets, "Detections file")->required();
  c_lo->add_option("--out", lo.out, "Output localizations file")->required();

  TopViewArgs tv;
  auto* c_tv = app.add_subcommand("render-topview", "Render 224x224 top views");
  c_tv->add_option("--mode", tv.mode, "cc (color composition) or bc (binary channels)")
      ->required()
      ->check(CLI::IsMember({"cc", "bc"}));
  c_tv->add_option("--loc", tv.loc, "Localizations file")->required();
  c_tv->add_option("--calib", tv.calib, "Calibration file")->required();
  c_tv->add_option("--out", tv.out, "Output directory")->required();
  c_tv->add_option("--bc-format", tv.bc_format,
                   "packed: one RGB PNG with values {0,255}; split: three 1-bit PNGs")
      ->capture_default_str()
      ->check(CLI::IsMember({"packed", "split"}));

  GraphArgs gr;
  auto* c_gr = app.add_subcommand("graph", "Build per-frame player graphs");
  c_gr->add_option("--loc", gr.loc, "Localizations file")->required();
  c_gr->add_option("--out", gr.out, "Output graphs file")->required();

  EvalCalibArgs ec;
  auto* c_ec = app.add_subcommand("eval-calib", "IoU entire / part against ground truth");
  c_ec->add_option("--gt", ec.gt, "Ground-truth calibration file")->required();
  c_ec->add_option("--pred", ec.pred, "Predicted calibration file")->required();
  c_ec->add_option("--frame", ec.frame, "Image size WxH (default: from the ground truth)");
  c_ec->add_option("--out", ec.out, "Optional JSON report");

  EvalSpottingArgs es;
  auto* c_es = app.add_subcommand("eval-spotting", "Average-mAP of action spotting");
  c_es->add_option("--gt", es.gt, "Annotations file")->required();
  c_es->add_option("--pred", es.pred, "Predictions file")->required();
  c_es->add_option("--margins", es.margins, "start:stop:step or a comma list, seconds")
      ->capture_default_str();
  c_es->add_option("--out", es.out, "Optional JSON report");

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Generate a synthetic mini-dataset");
  c_sy->add_option("--out", sy.out, "Output directory")->required();
  c_sy->add_option("--frames", sy.frames, "Number of frames")->capture_default_str();
  c_sy->add_option("--seed", sy.seed, "Seed")->capture_default_str();
  c_sy->add_option("--noise", sy.noise, "Fraction of zone-border pixels relabelled")
      ->capture_default_str();
  c_sy->add_option("--train", sy.train, "Training poses for build-dict")->capture_default_str();
  c_sy->add_option("--players", sy.players, "Players per frame")->capture_default_str();
  c_sy->add_option("--box-noise", sy.box_noise, "Bbox coordinate noise (pixels)")
      ->capture_default_str();
  c_sy->add_option("--crowd", sy.crowd, "Off-field detections per frame")->capture_default_str();
  c_sy->add_option("--actions", sy.actions, "Spotting annotations")->capture_default_str();
  c_sy->add_option("--frame", sy.frame, "Image size WxH")->capture_default_str();
  c_sy->add_option("--game-id", sy.game_id, "Game identifier")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*c_bd) return run_build_dict(bd);
    if (*c_ca) return run_calibrate(ca);
    if (*c_lo) return run_localize(lo);
    if (*c_tv) return run_render_topview(tv);
    if (*c_gr) return run_graph(gr);
    if (*c_ec) return run_eval_calib(ec);
    if (*c_es) return run_eval_spotting(es);
    if (*c_sy) return run_synth(sy);
  } catch (const FormatError& e) {
    std::cerr << "fieldcal: format error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "fieldcal: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "fieldcal: I/O failure: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "fieldcal: I/O failure: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "fieldcal: invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fieldcal: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
