#include "fieldcal/io.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "fieldcal/errors.hpp"
#include "fieldcal/png_io.hpp"

namespace fieldcal::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(const FrameKey& key) {
  return key.game_id + "/" + std::to_string(key.half) + "/" + std::to_string(key.frame_index);
}

namespace {

// Location of the value being parsed, for diagnostics.
class Ctx {
 public:
  Ctx(std::string_view source, std::string record)
      : source_(source), record_(std::move(record)) {}

  Ctx at(const std::string& record) const { return Ctx(source_, record); }

  [[noreturn]] void fail(std::string_view field, std::string_view problem) const {
    throw FormatError(source_ + ": " + record_ + ": field '" + std::string(field) +
                      "': " + std::string(problem));
  }

  const json& get(const json& obj, const char* key) const {
    if (!obj.is_object()) fail(key, "enclosing value is not an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(key, "missing");
    return *it;
  }

  const json* find(const json& obj, const char* key) const {
    const auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
  }

  std::int64_t integer(const json& v, const char* key, std::int64_t lo = INT64_MIN,
                       std::int64_t hi = INT64_MAX) const {
    if (!v.is_number_integer()) fail(key, "expected an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > std::uint64_t(INT64_MAX))
      fail(key, "out of range");
    const auto x = v.get<std::int64_t>();
    if (x < lo || x > hi)
      fail(key, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
    return x;
  }

  double number(const json& v, const char* key) const {
    if (!v.is_number()) fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "not finite");
    return x;
  }

  std::string string(const json& v, const char* key) const {
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  const json& array(const json& v, const char* key, std::optional<std::size_t> size = {}) const {
    if (!v.is_array()) fail(key, "expected an array");
    if (size && v.size() != *size) fail(key, "expected " + std::to_string(*size) + " elements");
    return v;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::string record_;
};

json parse_json(std::string_view text, const Ctx& ctx) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(ctx.source() + ": " + e.what());
  }
}

// Checks version and document kind; returns the named top-level array.
const json& open_document(const json& doc, const Ctx& ctx, const char* kind, const char* list) {
  if (!doc.is_object()) ctx.fail("(document)", "top level is not an object");
  const auto version = ctx.integer(ctx.get(doc, "version"), "version");
  if (version != kFormatVersion)
    ctx.fail("version", "unsupported version " + std::to_string(version));
  const std::string k = ctx.string(ctx.get(doc, "kind"), "kind");
  if (k != kind) ctx.fail("kind", "expected \"" + std::string(kind) + "\", got \"" + k + "\"");
  return ctx.array(ctx.get(doc, list), list);
}

json header(const char* kind) { return json{{"version", kFormatVersion}, {"kind", kind}}; }

std::string dump(const json& j) { return j.dump(1) + "\n"; }

json frame_json(const ImageFrame& f) {
  return json{{"width", f.width_px}, {"height", f.height_px}};
}

ImageFrame parse_frame(const json& j, const Ctx& ctx) {
  return ImageFrame{static_cast<int>(ctx.integer(ctx.get(j, "width"), "width", 1, 1 << 16)),
                    static_cast<int>(ctx.integer(ctx.get(j, "height"), "height", 1, 1 << 16))};
}

void put_key(json& j, const FrameKey& k) {
  j["game_id"] = k.game_id;
  j["half"] = k.half;
  j["frame_index"] = k.frame_index;
}

FrameKey parse_key(const json& j, const Ctx& ctx) {
  FrameKey k;
  k.game_id = ctx.string(ctx.get(j, "game_id"), "game_id");
  k.half = static_cast<int>(ctx.integer(ctx.get(j, "half"), "half", 1, 9));
  k.frame_index = ctx.integer(ctx.get(j, "frame_index"), "frame_index", 0);
  return k;
}

json homography_json(const Homography& h) {
  json a = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(h(r, c));
  return a;
}

Homography parse_homography(const json& v, const Ctx& ctx) {
  ctx.array(v, "homography", 9);
  Eigen::Matrix3d m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = ctx.number(v[i], "homography");
  const auto h = Homography::try_make(m);
  if (!h) ctx.fail("homography", "singular matrix");
  return *h;
}

json point_json(const Point2& p) { return json::array({p.x(), p.y()}); }

Point2 parse_point(const json& v, const char* key, const Ctx& ctx) {
  ctx.array(v, key, 2);
  return {ctx.number(v[0], key), ctx.number(v[1], key)};
}

json color_json(const Rgb& c) { return json::array({c[0], c[1], c[2]}); }

Rgb parse_color(const json& v, const char* key, const Ctx& ctx) {
  ctx.array(v, key, 3);
  Rgb c;
  for (int i = 0; i < 3; ++i) c[i] = static_cast<std::uint8_t>(ctx.integer(v[i], key, 0, 255));
  return c;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json options_json(const CalibrationOptions& o) {
  return json{{"sample_count", o.sample_count},
              {"sample_seed", o.sample_seed},
              {"max_iterations", o.max_iterations},
              {"gradient_tolerance", o.gradient_tolerance},
              {"template_padding", o.template_padding},
              {"min_boundary_points", o.min_boundary_points},
              {"huber_px", o.huber_px},
              {"truncate_px", o.truncate_px},
              {"residual_max_px", o.residual_max_px},
              {"min_visible_area_m2", o.min_visible_area_m2}};
}

CalibrationOptions parse_options(const json& j, const Ctx& ctx) {
  CalibrationOptions o;
  o.sample_count = static_cast<int>(ctx.integer(ctx.get(j, "sample_count"), "sample_count", 1, 1 << 24));
  const json& seed = ctx.get(j, "sample_seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
    ctx.fail("sample_seed", "expected a non-negative integer");
  o.sample_seed = seed.get<std::uint64_t>();
  o.max_iterations =
      static_cast<int>(ctx.integer(ctx.get(j, "max_iterations"), "max_iterations", 0, 1 << 24));
  o.gradient_tolerance = ctx.number(ctx.get(j, "gradient_tolerance"), "gradient_tolerance");
  o.template_padding = ctx.number(ctx.get(j, "template_padding"), "template_padding");
  o.min_boundary_points = static_cast<int>(
      ctx.integer(ctx.get(j, "min_boundary_points"), "min_boundary_points", 0, 1 << 24));
  o.huber_px = ctx.number(ctx.get(j, "huber_px"), "huber_px");
  if (o.huber_px < 0) ctx.fail("huber_px", "must be non-negative");
  o.truncate_px = ctx.number(ctx.get(j, "truncate_px"), "truncate_px");
  if (o.truncate_px < 0) ctx.fail("truncate_px", "must be non-negative");
  o.residual_max_px = ctx.number(ctx.get(j, "residual_max_px"), "residual_max_px");
  o.min_visible_area_m2 = ctx.number(ctx.get(j, "min_visible_area_m2"), "min_visible_area_m2");
  return o;
}

json localization_json(const PlayerLocalization& p) {
  return json{{"position", point_json(p.position)},
              {"color", color_json(p.color)},
              {"bbox_area_px", p.bbox_area_px}};
}

PlayerLocalization parse_localization(const json& j, const Ctx& ctx) {
  PlayerLocalization p;
  p.position = parse_point(ctx.get(j, "position"), "position", ctx);
  p.color = parse_color(ctx.get(j, "color"), "color", ctx);
  p.bbox_area_px = ctx.number(ctx.get(j, "bbox_area_px"), "bbox_area_px");
  if (p.bbox_area_px < 0) ctx.fail("bbox_area_px", "negative");
  return p;
}

std::string record_name(const char* list, std::size_t i) {
  return std::string(list) + "[" + std::to_string(i) + "]";
}

}  // namespace

// ---------------------------------------------------------------------------
// RLE

std::vector<std::uint32_t> rle_encode(const std::vector<std::uint8_t>& mask) {
  std::vector<std::uint32_t> counts;
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (const std::uint8_t v : mask) {
    const std::uint8_t b = v ? 1 : 0;
    if (b != current) {
      counts.push_back(run);
      current = b;
      run = 0;
    }
    ++run;
  }
  counts.push_back(run);
  return counts;
}

std::vector<std::uint8_t> rle_decode(const std::vector<std::uint32_t>& counts, std::size_t size) {
  std::vector<std::uint8_t> mask;
  mask.reserve(size);
  std::uint8_t value = 0;
  for (const std::uint32_t c : counts) {
    if (mask.size() + c > size) throw FormatError("mask runs exceed the mask size");
    mask.insert(mask.end(), c, value);
    value ^= 1;
  }
  if (mask.size() != size) throw FormatError("mask runs do not cover the mask");
  return mask;
}

// ---------------------------------------------------------------------------
// Calibration

std::string serialize_calibration(const CalibrationDocument& doc) {
  json j = header("calibration");
  j["frame"] = frame_json(doc.frame);
  if (doc.options) j["options"] = options_json(*doc.options);
  json frames = json::array();
  for (const auto& r : doc.frames) {
    json f;
    put_key(f, r.key);
    f["homography"] = homography_json(r.homography);
    f["relevance"] = r.relevance;
    f["residual"] = std::isfinite(r.residual) ? json(r.residual) : json(nullptr);
    f["template_index"] = r.template_index;
    frames.push_back(std::move(f));
  }
  j["frames"] = std::move(frames);
  return dump(j);
}

CalibrationDocument parse_calibration(std::string_view text, std::string_view source) {
  const Ctx top(source, "document");
  const json doc = parse_json(text, top);
  const json& frames = open_document(doc, top, "calibration", "frames");
  CalibrationDocument out;
  out.frame = parse_frame(top.get(doc, "frame"), top);
  if (const json* o = top.find(doc, "options")) out.options = parse_options(*o, top.at("options"));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Ctx ctx = top.at(record_name("frames", i));
    const json& f = frames[i];
    FrameRecord r;
    r.key = parse_key(f, ctx);
    r.homography = parse_homography(ctx.get(f, "homography"), ctx);
    r.relevance = static_cast<int>(ctx.integer(ctx.get(f, "relevance"), "relevance", 0, 1));
    const json& res = ctx.get(f, "residual");
    if (res.is_null()) {
      r.residual = std::numeric_limits<double>::infinity();
    } else {
      r.residual = ctx.number(res, "residual");
      if (r.residual < 0) ctx.fail("residual", "negative");
    }
    r.template_index = static_cast<int>(
        ctx.integer(ctx.get(f, "template_index"), "template_index", 0, INT32_MAX));
    out.frames.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detections, localizations, graphs

std::string serialize_detections(const std::vector<DetectionFrame>& frames) {
  json j = header("detections");
  json arr = json::array();
  for (const auto& fr : frames) {
    json f;
    put_key(f, fr.key);
    json dets = json::array();
    for (const auto& d : fr.detections) {
      json dj{{"bbox", json::array({d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2})}};
      if (d.mean_color) dj["color"] = color_json(*d.mean_color);
      if (d.has_mask())
        dj["mask"] = json{{"width", d.mask_width},
                          {"height", d.mask_height},
                          {"counts", rle_encode(d.mask)}};
      dets.push_back(std::move(dj));
    }
    f["detections"] = std::move(dets);
    arr.push_back(std::move(f));
  }
  j["frames"] = std::move(arr);
  return dump(j);
}

std::vector<DetectionFrame> parse_detections(std::string_view text, std::string_view source) {
  const Ctx top(source, "document");
  const json doc = parse_json(text, top);
  const json& frames = open_document(doc, top, "detections", "frames");
  std::vector<DetectionFrame> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Ctx fctx = top.at(record_name("frames", i));
    DetectionFrame fr;
    fr.key = parse_key(frames[i], fctx);
    const json& dets = fctx.array(fctx.get(frames[i], "detections"), "detections");
    for (std::size_t k = 0; k < dets.size(); ++k) {
      const Ctx ctx = top.at(record_name("frames", i) + "." + record_name("detections", k));
      const json& dj = dets[k];
      Detection d;
      const json& b = ctx.array(ctx.get(dj, "bbox"), "bbox", 4);
      d.bbox = BBox{ctx.number(b[0], "bbox"), ctx.number(b[1], "bbox"), ctx.number(b[2], "bbox"),
                    ctx.number(b[3], "bbox")};
      if (const json* c = ctx.find(dj, "color")) d.mean_color = parse_color(*c, "color", ctx);
      if (const json* m = ctx.find(dj, "mask")) {
        d.mask_width = static_cast<int>(ctx.integer(ctx.get(*m, "width"), "mask.width", 0, 1 << 16));
        d.mask_height =
            static_cast<int>(ctx.integer(ctx.get(*m, "height"), "mask.height", 0, 1 << 16));
        const json& cj = ctx.array(ctx.get(*m, "counts"), "mask.counts");
        std::vector<std::uint32_t> counts;
        for (const auto& c : cj)
          counts.push_back(static_cast<std::uint32_t>(ctx.integer(c, "mask.counts", 0, UINT32_MAX)));
        try {
          d.mask = rle_decode(counts, std::size_t(d.mask_width) * d.mask_height);
        } catch (const FormatError& e) {
          ctx.fail("mask.counts", e.what());
        }
        if (d.mask.empty()) ctx.fail("mask", "empty mask");
      }
      try {
        validate_detection(d);
      } catch (const std::invalid_argument& e) {
        ctx.fail(d.has_mask() ? "mask" : "bbox", e.what());
      }
      fr.detections.push_back(std::move(d));
    }
    out.push_back(std::move(fr));
  }
  return out;
}

std::string serialize_localizations(const std::vector<LocalizationFrame>& frames) {
  json j = header("localizations");
  json arr = json::array();
  for (const auto& fr : frames) {
    json f;
    put_key(f, fr.key);
    json players = json::array();
    for (const auto& p : fr.players) players.push_back(localization_json(p));
    f["players"] = std::move(players);
    arr.push_back(std::move(f));
  }
  j["frames"] = std::move(arr);
  return dump(j);
}

std::vector<LocalizationFrame> parse_localizations(std::string_view text,
                                                   std::string_view source) {
  const Ctx top(source, "document");
  const json doc = parse_json(text, top);
  const json& frames = open_document(doc, top, "localizations", "frames");
  std::vector<LocalizationFrame> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Ctx fctx = top.at(record_name("frames", i));
    LocalizationFrame fr;
    fr.key = parse_key(frames[i], fctx);
    const json& players = fctx.array(fctx.get(frames[i], "players"), "players");
    for (std::size_t k = 0; k < players.size(); ++k)
      fr.players.push_back(parse_localization(
          players[k], top.at(record_name("frames", i) + "." + record_name("players", k))));
    out.push_back(std::move(fr));
  }
  return out;
}

std::string serialize_graphs(const std::vector<GraphFrame>& frames) {
  json j = header("graphs");
  json arr = json::array();
  for (const auto& fr : frames) {
    json f;
    put_key(f, fr.key);
    json nodes = json::array();
    for (const auto& p : fr.graph.nodes) nodes.push_back(localization_json(p));
    json edges = json::array();
    for (const auto& [a, b] : fr.graph.edges) edges.push_back(json::array({a, b}));
    f["nodes"] = std::move(nodes);
    f["edges"] = std::move(edges);
    arr.push_back(std::move(f));
  }
  j["frames"] = std::move(arr);
  return dump(j);
}

std::vector<GraphFrame> parse_graphs(std::string_view text, std::string_view source) {
  const Ctx top(source, "document");
  const json doc = parse_json(text, top);
  const json& frames = open_document(doc, top, "graphs", "frames");
  std::vector<GraphFrame> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string rec = record_name("frames", i);
    const Ctx fctx = top.at(rec);
    GraphFrame fr;
    fr.key = parse_key(frames[i], fctx);
    const json& nodes = fctx.array(fctx.get(frames[i], "nodes"), "nodes");
    for (std::size_t k = 0; k < nodes.size(); ++k)
      fr.graph.nodes.push_back(parse_localization(nodes[k], top.at(rec + "." + record_name("nodes", k))));
    const json& edges = fctx.array(fctx.get(frames[i], "edges"), "edges");
    const auto n = static_cast<std::int64_t>(fr.graph.nodes.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const Ctx ctx = top.at(rec + "." + record_name("edges", k));
      ctx.array(edges[k], "edge", 2);
      const auto a = ctx.integer(edges[k][0], "edge", 0, n - 1);
      const auto b = ctx.integer(edges[k][1], "edge", 0, n - 1);
      if (!(a < b)) ctx.fail("edge", "expected i < j");
      fr.graph.edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
    out.push_back(std::move(fr));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spotting

namespace {

std::int64_t to_ms(double t) { return std::llround(t * 1000.0); }

json action_json(ActionClass label, double time_s, int half, const std::string& game) {
  return json{{"game_id", game},
              {"half", half},
              {"position_ms", to_ms(time_s)},
              {"label", std::string(action_label(label))}};
}

template <typename T>
void parse_action_fields(const json& j, const Ctx& ctx, T& a) {
  a.game_id = ctx.string(ctx.get(j, "game_id"), "game_id");
  a.half = static_cast<int>(ctx.integer(ctx.get(j, "half"), "half", 1, 9));
  a.time_s = static_cast<double>(
                 ctx.integer(ctx.get(j, "position_ms"), "position_ms", 0, std::int64_t(1) << 40)) /
             1000.0;
  const std::string label = ctx.string(ctx.get(j, "label"), "label");
  const auto c = parse_action_label(label);
  if (!c) ctx.fail("label", "unknown action label \"" + label + "\"");
  a.label = *c;
}

}  // namespace

std::string serialize_annotations(const std::vector<GroundTruthAction>& actions) {
  json j = header("annotations");
  json arr = json::array();
  for (const auto& a : actions) arr.push_back(action_json(a.label, a.time_s, a.half, a.game_id));
  j["annotations"] = std::move(arr);
  return dump(j);
}

std::vector<GroundTruthAction> parse_annotations(std::string_view text, std::string_view source) {
  const Ctx top(source, "document");
  const json doc = parse_json(text, top);
  const json& arr = open_document(doc, top, "annotations", "annotations");
  std::vector<GroundTruthAction> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    GroundTruthAction a;
    parse_action_fields(arr[i], top.at(record_name("annotations", i)), a);
    out.push_back(std::move(a));
  }
  return out;
}

std::string serialize_predictions(const std::vector<SpottingPrediction>& preds) {
  json j = header("predictions");
  json arr = json::array();
  for (const auto& p : preds) {
    json pj = action_json(p.label, p.time_s, p.half, p.game_id);
    pj["confidence"] = p.confidence;
    arr.push_back(std::move(pj));
  }
  j["predictions"] = std::move(arr);
  return dump(j);
}

std::vector<SpottingPrediction> parse_predictions(std::string_view text, std::string_view source) {
  const Ctx top(source, "document");
  const json doc = parse_json(text, top);
  const json* kind = doc.is_object() ? top.find(doc, "kind") : nullptr;
  const bool actions = kind && kind->is_string() && kind->get<std::string>() == "annotations";
  const char* list = actions ? "annotations" : "predictions";
  const json& arr = open_document(doc, top, list, list);
  std::vector<SpottingPrediction> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const Ctx ctx = top.at(record_name(list, i));
    SpottingPrediction p;
    parse_action_fields(arr[i], ctx, p);
    p.confidence = actions ? 1.0 : ctx.number(ctx.get(arr[i], "confidence"), "confidence");
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports and field model

std::string serialize_field_model(const FieldModel& field) {
  json j = header("field_model");
  j["length_m"] = field.length_m();
  j["width_m"] = field.width_m();
  json markings = json::array();
  for (const auto& m : field.markings()) {
    if (m.kind == MarkingPrimitive::Kind::kSegment)
      markings.push_back(
          json{{"type", "segment"}, {"a", point_json(m.a)}, {"b", point_json(m.b)}, {"width_m", m.width_m}});
    else
      markings.push_back(json{{"type", "arc"},
                              {"center", point_json(m.center)},
                              {"radius", m.radius},
                              {"angle_begin", m.angle_begin},
                              {"angle_end", m.angle_end},
                              {"width_m", m.width_m}});
  }
  j["markings"] = std::move(markings);
  json zones = json::array();
  for (const auto& z : field.zones()) {
    json boundary = json::array();
    for (const auto& p : z.boundary) boundary.push_back(point_json(p));
    zones.push_back(json{{"id", z.id},
                         {"name", z.name},
                         {"label", z.label_color},
                         {"boundary", std::move(boundary)}});
  }
  j["zones"] = std::move(zones);
  return dump(j);
}

std::string serialize_iou_report(const IoUReport& r) {
  json j = header("iou_report");
  j["count"] = r.entire.size();
  j["mean_entire"] = r.mean_entire;
  j["median_entire"] = r.median_entire;
  j["mean_part"] = r.mean_part;
  j["median_part"] = r.median_part;
  j["undefined_entire"] = r.undefined_entire;
  j["undefined_part"] = r.undefined_part;
  json e = json::array(), p = json::array();
  for (const auto& v : r.entire) e.push_back(optional_number(v));
  for (const auto& v : r.part) p.push_back(optional_number(v));
  j["entire"] = std::move(e);
  j["part"] = std::move(p);
  return dump(j);
}

std::string serialize_spotting_report(const SpottingReport& r) {
  json j = header("spotting_report");
  j["margins"] = r.margins;
  j["average_map"] = r.average_map;
  j["map_per_margin"] = r.map_per_margin;
  json classes = json::array();
  for (int c = 0; c < kActionClassCount; ++c) {
    json ap = json::array();
    for (const auto& v : r.ap[c]) ap.push_back(optional_number(v));
    classes.push_back(json{{"label", std::string(action_label(static_cast<ActionClass>(c)))},
                           {"gt_count", r.gt_count[c]},
                           {"average_ap", optional_number(r.class_average_ap[c])},
                           {"ap", std::move(ap)}});
  }
  j["classes"] = std::move(classes);
  return dump(j);
}

// ---------------------------------------------------------------------------
// Files

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return ss.str();
}

namespace {

fs::path temp_sibling(const fs::path& target, const char* tag) {
  const fs::path parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
  return parent / ("." + target.filename().string() + tag + std::to_string(::getpid()));
}

}  // namespace

void write_text_atomic(const fs::path& path, std::string_view text) {
  const fs::path tmp = temp_sibling(path, ".tmp-");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot replace '" + path.string() + "'");
  }
}

StagedDirectory::StagedDirectory(fs::path target)
    : target_(std::move(target)), staging_(temp_sibling(target_, ".staging-")) {
  std::error_code ec;
  if (fs::exists(target_, ec) && !fs::is_directory(target_, ec))
    throw IoError("'" + target_.string() + "' exists and is not a directory");
  fs::remove_all(staging_, ec);
  if (!fs::create_directories(staging_, ec) || ec)
    throw IoError("cannot create '" + staging_.string() + "'");
}

StagedDirectory::~StagedDirectory() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagedDirectory::commit() {
  std::error_code ec;
  if (fs::exists(target_, ec)) fs::remove_all(target_, ec);
  if (ec) throw IoError("cannot replace '" + target_.string() + "'");
  fs::rename(staging_, target_, ec);
  if (ec) throw IoError("cannot move output into '" + target_.string() + "'");
  committed_ = true;
}

// ---------------------------------------------------------------------------
// Dictionary and segmentation directories

namespace {

std::string numbered_png(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu.png", i);
  return buf;
}

ZoneSegmentation read_label_png(const fs::path& path, const Ctx& ctx) {
  png::Image img = png::read(path);
  if (img.channels != 1) ctx.fail("file", "'" + path.string() + "' is not a gray label image");
  ZoneSegmentation seg(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (img.pixels[i] > kZoneCount)
      ctx.fail("file", "'" + path.string() + "' has label " + std::to_string(img.pixels[i]) +
                           " above " + std::to_string(kZoneCount));
    seg.labels[i] = img.pixels[i];
  }
  return seg;
}

// Reject names that could escape the directory.
fs::path member(const fs::path& dir, const std::string& name, const Ctx& ctx) {
  const fs::path rel(name);
  if (name.empty() || rel.is_absolute())
    ctx.fail("file", "invalid file name \"" + name + "\"");
  for (const auto& part : rel)
    if (part == "..") ctx.fail("file", "file name leaves the directory");
  return dir / rel;
}

}  // namespace

void write_dictionary_files(const fs::path& dir, const TemplateDictionary& dict) {
  fs::create_directories(dir / "templates");
  json j = header("dictionary");
  j["frame"] = frame_json(dict.frame);
  j["descriptor"] = json{{"grid", dict.descriptor_spec.grid},
                         {"channels", dict.descriptor_spec.channels}};
  j["seed"] = dict.seed;
  j["k_min"] = dict.k_min;
  j["k_max"] = dict.k_max;
  json entries = json::array();
  for (std::size_t i = 0; i < dict.entries.size(); ++i) {
    const auto& e = dict.entries[i];
    const std::string file = "templates/" + numbered_png(i);
    png::write(dir / file, e.tmpl.width_px, e.tmpl.height_px, 1, e.tmpl.labels);
    entries.push_back(json{{"homography", homography_json(e.homography)}, {"template", file}});
  }
  j["entries"] = std::move(entries);
  write_text_atomic(dir / "meta.json", dump(j));
}

void write_dictionary(const fs::path& dir, const TemplateDictionary& dict) {
  StagedDirectory stage(dir);
  write_dictionary_files(stage.path(), dict);
  stage.commit();
}

TemplateDictionary read_dictionary(const fs::path& dir) {
  const fs::path meta = dir / "meta.json";
  if (!fs::exists(meta)) throw IoError("'" + dir.string() + "' has no meta.json");
  const std::string source = meta.string();
  const Ctx top(source, "document");
  const json doc = parse_json(read_text(meta), top);
  const json& entries = open_document(doc, top, "dictionary", "entries");
  TemplateDictionary dict;
  dict.frame = parse_frame(top.get(doc, "frame"), top);
  const json& d = top.get(doc, "descriptor");
  dict.descriptor_spec.grid = static_cast<int>(top.integer(top.get(d, "grid"), "descriptor.grid", 1, 4096));
  dict.descriptor_spec.channels = static_cast<int>(
      top.integer(top.get(d, "channels"), "descriptor.channels", kZoneCount + 1, 256));
  const json& seed = top.get(doc, "seed");
  if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() &&
                                    seed.get<std::int64_t>() < 0))
    top.fail("seed", "expected a non-negative integer");
  dict.seed = seed.get<std::uint64_t>();
  dict.k_min = static_cast<int>(top.integer(top.get(doc, "k_min"), "k_min", 1, 1 << 20));
  dict.k_max = static_cast<int>(top.integer(top.get(doc, "k_max"), "k_max", dict.k_min, 1 << 20));
  if (entries.empty()) top.fail("entries", "dictionary has no entries");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Ctx ctx = top.at(record_name("entries", i));
    TemplateEntry e;
    e.homography = parse_homography(ctx.get(entries[i], "homography"), ctx);
    const fs::path file = member(dir, ctx.string(ctx.get(entries[i], "template"), "template"), ctx);
    e.tmpl = read_label_png(file, ctx);
    if (e.tmpl.frame() != dict.frame) ctx.fail("template", "image size differs from frame");
    e.descriptor = descriptor_of(e.tmpl, dict.descriptor_spec);
    dict.entries.push_back(std::move(e));
  }
  return dict;
}

void write_segmentation_files(const fs::path& dir, const std::vector<SegmentationFrame>& frames) {
  fs::create_directories(dir);
  json j = header("segmentations");
  json arr = json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& s = frames[i].segmentation;
    const std::string file = numbered_png(i);
    png::write(dir / file, s.width_px, s.height_px, 1, s.labels);
    json f;
    put_key(f, frames[i].key);
    f["file"] = file;
    arr.push_back(std::move(f));
  }
  j["frames"] = std::move(arr);
  write_text_atomic(dir / "index.json", dump(j));
}

std::vector<SegmentationFrame> read_segmentations(const fs::path& dir) {
  const fs::path index = dir / "index.json";
  if (!fs::exists(index)) throw IoError("'" + dir.string() + "' has no index.json");
  const std::string source = index.string();
  const Ctx top(source, "document");
  const json doc = parse_json(read_text(index), top);
  const json& frames = open_document(doc, top, "segmentations", "frames");
  std::vector<SegmentationFrame> out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Ctx ctx = top.at(record_name("frames", i));
    SegmentationFrame s;
    s.key = parse_key(frames[i], ctx);
    s.segmentation = read_label_png(member(dir, ctx.string(ctx.get(frames[i], "file"), "file"), ctx), ctx);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace fieldcal::io
