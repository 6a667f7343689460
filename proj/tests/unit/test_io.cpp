#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include "doctest.h"
#include "fieldcal/errors.hpp"
#include "fieldcal/io.hpp"
#include "fieldcal/random.hpp"
#include "fuzz.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace fieldcal;
using namespace fieldcal::io;
namespace fs = std::filesystem;
using namespace fieldcal::test;

namespace {

constexpr int kFuzzCases = 10000;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("fieldcal_io_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string error_of(auto&& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) {
  return s.find(part) != std::string::npos;
}

}  // namespace

TEST_CASE("run-length coding") {
  CHECK(rle_encode({}) == std::vector<std::uint32_t>{0});
  CHECK(rle_encode({1, 1, 0}) == std::vector<std::uint32_t>{0, 2, 1});
  CHECK(rle_encode({0, 0, 1, 0}) == std::vector<std::uint32_t>{2, 1, 1});
  CHECK(rle_decode({0, 2, 1}, 3) == std::vector<std::uint8_t>{1, 1, 0});
  CHECK_THROWS_AS(rle_decode({2, 2}, 3), FormatError);
  CHECK_THROWS_AS(rle_decode({1}, 3), FormatError);
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::uint8_t> m(rng.index(300));
    for (auto& v : m) v = rng.index(3) == 0;
    CHECK(rle_decode(rle_encode(m), m.size()) == m);
  }
}

TEST_CASE("calibration records round-trip") {
  Rng rng(1);
  for (int i = 0; i < kFuzzCases; ++i) {
    const CalibrationDocument doc = random_calibration(rng);
    const std::string text = serialize_calibration(doc);
    const auto back = parse_calibration(text, "fuzz");
    REQUIRE(back.frames == doc.frames);
    REQUIRE(back.options == doc.options);
    REQUIRE(back.frame == doc.frame);
    REQUIRE(serialize_calibration(back) == text);
  }
}

TEST_CASE("detections round-trip") {
  Rng rng(2);
  for (int i = 0; i < kFuzzCases; ++i) {
    const auto frames = random_detection_frames(rng);
    const auto back = parse_detections(serialize_detections(frames), "fuzz");
    REQUIRE(back.size() == frames.size());
    for (std::size_t k = 0; k < frames.size(); ++k) {
      REQUIRE(back[k].key == frames[k].key);
      REQUIRE(back[k].detections == frames[k].detections);
    }
  }
}

TEST_CASE("localizations and graphs round-trip") {
  Rng rng(3);
  for (int i = 0; i < kFuzzCases; ++i) {
    const auto [locs, graphs] = random_player_frames(rng);
    const auto lb = parse_localizations(serialize_localizations(locs), "fuzz");
    REQUIRE(lb.size() == locs.size());
    const auto gb = parse_graphs(serialize_graphs(graphs), "fuzz");
    REQUIRE(gb.size() == graphs.size());
    for (std::size_t k = 0; k < locs.size(); ++k) {
      REQUIRE(lb[k].key == locs[k].key);
      REQUIRE(lb[k].players == locs[k].players);
      REQUIRE(gb[k].key == graphs[k].key);
      REQUIRE(same_graph(gb[k].graph, graphs[k].graph));
    }
  }
}

TEST_CASE("annotations and predictions round-trip") {
  Rng rng(5);
  for (int i = 0; i < kFuzzCases; ++i) {
    std::vector<GroundTruthAction> gts(rng.index(5));
    for (auto& a : gts) a = random_action<GroundTruthAction>(rng);
    std::vector<SpottingPrediction> preds(rng.index(5));
    for (auto& p : preds) {
      p = random_action<SpottingPrediction>(rng);
      p.confidence = rng.uniform();
    }
    REQUIRE(parse_annotations(serialize_annotations(gts), "fuzz") == gts);
    REQUIRE(parse_predictions(serialize_predictions(preds), "fuzz") == preds);
  }
}

TEST_CASE("diagnostics name the source, record and field") {
  CalibrationDocument doc;
  for (int i = 0; i < 3; ++i) doc.frames.push_back({{"g", 1, i}, camera(i), 1, 0.5, 0});
  const std::string good = serialize_calibration(doc);

  auto with = [&](const std::string& from, const std::string& to, std::size_t nth = 0) {
    std::string s = good;
    std::size_t pos = 0;
    for (std::size_t k = 0; k <= nth; ++k) pos = s.find(from, k == 0 ? 0 : pos + 1);
    REQUIRE(pos != std::string::npos);
    return s.replace(pos, from.size(), to);
  };
  auto err = [](const std::string& text) {
    return error_of([&] { (void)parse_calibration(text, "calib.json"); });
  };

  std::string e = err(with("\"relevance\": 1", "\"relevance\": 2", 1));
  CHECK(contains(e, "calib.json: frames[1]: field 'relevance'"));
  CHECK(contains(e, "outside [0, 1]"));
  e = err(with("\"half\": 1", "\"half\": \"one\"", 2));
  CHECK(contains(e, "calib.json: frames[2]: field 'half': expected an integer"));
  e = err(with("\"residual\": 0.5", "\"residual\": -1.0"));
  CHECK(contains(e, "frames[0]: field 'residual': negative"));
  e = err(with("\"residual\": 0.5,", "", 1));
  CHECK(contains(e, "calib.json: frames[1]: field 'residual': missing"));
  e = err(with("\"version\": 1", "\"version\": 7"));
  CHECK(contains(e, "calib.json: document: field 'version': unsupported version 7"));
  e = err(with("\"kind\": \"calibration\"", "\"kind\": \"detections\""));
  CHECK(contains(e, "field 'kind'"));
  e = err(good.substr(0, good.size() / 2));
  CHECK(contains(e, "calib.json"));
  CHECK(contains(e, "line"));

  // A singular matrix cannot become a homography.
  std::string singular = good;
  const auto h0 = singular.find("\"homography\"");
  const auto open = singular.find('[', h0), close = singular.find(']', h0);
  singular.replace(open, close - open + 1, "[1, 2, 3, 2, 4, 6, 0, 0, 1]");
  CHECK(contains(err(singular), "frames[0]: field 'homography': singular matrix"));

  CalibrationOptions o;
  o.huber_px = -1;
  doc.options = o;
  CHECK(contains(err(serialize_calibration(doc)), "options: field 'huber_px': must be non-negative"));
}

TEST_CASE("detection and action diagnostics") {
  DetectionFrame f{{"g", 1, 0}, {}};
  Detection d;
  d.bbox = {10, 10, 12.5, 13};
  const auto [w, h] = mask_extent(d.bbox);
  d.mask_width = w;
  d.mask_height = h;
  d.mask.assign(std::size_t(w) * h, 1);
  f.detections = {d, d};
  std::string text = serialize_detections({f});
  // Corrupt the second detection's mask: runs no longer cover it.
  const auto at = text.rfind("\"counts\"");
  REQUIRE(at != std::string::npos);
  const auto end = text.find(']', at);
  text.replace(at, end - at + 1, "\"counts\": [0, 1]");
  const std::string e = error_of([&] { (void)parse_detections(text, "dets.json"); });
  CHECK(contains(e, "dets.json: frames[0].detections[1]: field 'mask.counts'"));

  const std::string actions =
      R"({"version": 1, "kind": "annotations", "annotations": [)"
      R"({"game_id": "g", "half": 1, "position_ms": 1000, "label": "Goal"},)"
      R"({"game_id": "g", "half": 1, "position_ms": 2000, "label": "Dribble"}]})";
  const std::string ae = error_of([&] { (void)parse_annotations(actions, "ann.json"); });
  CHECK(contains(ae, "ann.json: annotations[1]: field 'label': unknown action label \"Dribble\""));
  CHECK(parse_annotations(actions.substr(0, actions.find(",{\"game_id\": \"g\", \"half\": 1, \"position_ms\": 2000")) + "]}",
                          "ann.json")
            .size() == 1);
}

TEST_CASE("atomic writes and staged directories") {
  TempDir tmp("atomic");
  const fs::path file = tmp.path / "out.json";
  write_text_atomic(file, "first");
  write_text_atomic(file, "second");
  CHECK(read_text(file) == "second");
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp.path)) ++n;
  CHECK(n == 1);
  CHECK_THROWS_AS(write_text_atomic(tmp.path / "missing" / "x.json", "x"), IoError);
  CHECK_THROWS_AS(read_text(tmp.path / "nope.json"), IoError);

  const fs::path dir = tmp.path / "dir";
  {
    StagedDirectory staged(dir);
    write_text_atomic(staged.path() / "a.txt", "a");
  }
  CHECK_FALSE(fs::exists(dir));
  {
    StagedDirectory staged(dir);
    write_text_atomic(staged.path() / "a.txt", "a");
    staged.commit();
  }
  CHECK(read_text(dir / "a.txt") == "a");
  {
    StagedDirectory staged(dir);
    write_text_atomic(staged.path() / "b.txt", "b");
    staged.commit();
  }
  CHECK_FALSE(fs::exists(dir / "a.txt"));
  CHECK(read_text(dir / "b.txt") == "b");
}

TEST_CASE("segmentation directories round-trip") {
  TempDir tmp("segs");
  Rng rng(8);
  std::vector<SegmentationFrame> frames;
  for (int i = 0; i < 5; ++i) {
    ZoneSegmentation s(1 + int(rng.index(60)), 1 + int(rng.index(40)));
    for (auto& v : s.labels) v = std::uint8_t(rng.index(kZoneCount + 1));
    frames.push_back({random_key(rng), s});
  }
  write_segmentation_files(tmp.path, frames);
  const auto back = read_segmentations(tmp.path);
  REQUIRE(back.size() == frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(back[i].key == frames[i].key);
    CHECK(back[i].segmentation == frames[i].segmentation);
  }
  CHECK_THROWS_AS(read_segmentations(tmp.path / "none"), IoError);

  // Label values above the zone range are rejected.
  frames.resize(1);
  frames[0].segmentation.labels[0] = 200;
  write_segmentation_files(tmp.path, frames);
  CHECK(contains(error_of([&] { (void)read_segmentations(tmp.path); }), "field 'file'"));
}

TEST_CASE("dictionary directories round-trip") {
  TempDir tmp("dict");
  const FieldModel field = standard_field();
  const ImageFrame frame{192, 108};
  TemplateDictionary dict;
  dict.frame = frame;
  dict.seed = 9;
  dict.k_min = 1;
  dict.k_max = 4;
  for (int i = 0; i < 3; ++i)
    dict.entries.push_back(make_template_entry(rescale_to_frame(camera(i), {960, 540}, frame),
                                               frame, field, dict.descriptor_spec));
  const fs::path dir = tmp.path / "d";
  write_dictionary(dir, dict);
  const auto back = read_dictionary(dir);
  CHECK(back.frame == dict.frame);
  CHECK(back.seed == dict.seed);
  CHECK(back.k_min == dict.k_min);
  CHECK(back.k_max == dict.k_max);
  CHECK(back.descriptor_spec == dict.descriptor_spec);
  REQUIRE(back.size() == dict.size());
  for (std::size_t i = 0; i < dict.size(); ++i) {
    CHECK(back.entries[i].homography == dict.entries[i].homography);
    CHECK(back.entries[i].tmpl == dict.entries[i].tmpl);
    CHECK(back.entries[i].descriptor == dict.entries[i].descriptor);
  }
  CHECK_THROWS_AS(read_dictionary(tmp.path / "empty"), IoError);
  fs::create_directories(tmp.path / "empty");
  CHECK_THROWS_AS(read_dictionary(tmp.path / "empty"), IoError);
}

TEST_CASE("annotations read as predictions") {
  Rng rng(12);
  std::vector<GroundTruthAction> gts(20);
  for (auto& a : gts) a = random_action<GroundTruthAction>(rng);
  const auto preds = parse_predictions(serialize_annotations(gts), "ann.json");
  REQUIRE(preds.size() == gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    CHECK(preds[i].label == gts[i].label);
    CHECK(preds[i].time_s == gts[i].time_s);
    CHECK(preds[i].half == gts[i].half);
    CHECK(preds[i].game_id == gts[i].game_id);
    CHECK(preds[i].confidence == 1.0);
  }
  CHECK_THROWS_AS(parse_annotations(serialize_predictions(preds), "p.json"), FormatError);
}

TEST_CASE("conformance corpus") {
  const fs::path root = FIELDCAL_CONFORMANCE_DIR;
  auto parse_any = [](const fs::path& p) {
    const std::string text = read_text(p), name = p.filename().string();
    const std::string kind = name.substr(0, name.find_first_of("_."));
    if (kind == "calibration") (void)parse_calibration(text, name);
    else if (kind == "detections") (void)parse_detections(text, name);
    else if (kind == "localizations") (void)parse_localizations(text, name);
    else if (kind == "graphs") (void)parse_graphs(text, name);
    else if (kind == "annotations") (void)parse_annotations(text, name);
    else if (kind == "predictions") (void)parse_predictions(text, name);
    else FAIL("unknown corpus file " << name);
  };
  int valid = 0;
  for (const auto& e : fs::directory_iterator(root / "valid")) {
    CAPTURE(e.path().filename().string());
    CHECK_NOTHROW(parse_any(e.path()));
    ++valid;
  }
  CHECK(valid >= 7);

  const auto expected = nlohmann::json::parse(read_text(root / "invalid" / "expected.json"));
  int invalid = 0;
  for (const auto& e : fs::directory_iterator(root / "invalid")) {
    const std::string name = e.path().filename().string();
    if (name == "expected.json") continue;
    CAPTURE(name);
    REQUIRE(expected.contains(name));
    const std::string message = error_of([&] { parse_any(e.path()); });
    CHECK(contains(message, expected[name].get<std::string>()));
    ++invalid;
  }
  CHECK(invalid == int(expected.size()));

  // The valid corpus survives a serialize/parse cycle unchanged.
  const auto c = parse_calibration(read_text(root / "valid" / "calibration.json"), "c");
  CHECK(parse_calibration(serialize_calibration(c), "c").frames == c.frames);
  const auto d = parse_detections(read_text(root / "valid" / "detections.json"), "d");
  CHECK(parse_detections(serialize_detections(d), "d")[0].detections == d[0].detections);
  const auto a = parse_annotations(read_text(root / "valid" / "annotations.json"), "a");
  CHECK(a[1].label == ActionClass::kYellowToRedCard);
  CHECK(a[2].label == ActionClass::kShotsOnTarget);
}
