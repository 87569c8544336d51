#pragma once

// JSON and CSV encodings shared by the CLI and the HTTP service.

#include <cstdio>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cornea/errors.hpp"
#include "cornea/geometry.hpp"
#include "cornea/landmarks.hpp"
#include "cornea/patterns.hpp"
#include "cornea/pipeline.hpp"
#include "cornea/simulator.hpp"

namespace cornea::io {

using nlohmann::json;

namespace detail {

inline void only_keys(const json& j, std::initializer_list<std::string_view> allowed,
                      std::string_view what) {
  if (!j.is_object()) throw ParameterError(std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) throw ParameterError("unknown key '" + key + "' in " + std::string(what));
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParameterError(std::string("key '") + key + "' has the wrong type");
  }
}

}  // namespace detail

// Parses text, mapping syntax errors onto FormatError.
inline json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
}

// ---- geometry ----

inline json to_json(const ImagingGeometry& g) {
  return {{"pattern_height_cm", g.pattern_height_cm()},
          {"eye_distance_cm", g.eye_distance_cm()},
          {"eye_radius_cm", g.eye_radius_cm()},
          {"focal_length_cm", g.focal_length_cm()},
          {"sensor_height_cm", g.sensor_height_cm()},
          {"sensor_rows", g.sensor_rows()}};
}

inline ImagingGeometry geometry_from_json(const json& j, const ImagingGeometry& base = {}) {
  detail::only_keys(j,
                    {"pattern_height_cm", "eye_distance_cm", "eye_radius_cm", "focal_length_cm",
                     "sensor_height_cm", "sensor_rows"},
                    "geometry");
  return ImagingGeometry(detail::get_or(j, "pattern_height_cm", base.pattern_height_cm()),
                         detail::get_or(j, "eye_distance_cm", base.eye_distance_cm()),
                         detail::get_or(j, "eye_radius_cm", base.eye_radius_cm()),
                         detail::get_or(j, "focal_length_cm", base.focal_length_cm()),
                         detail::get_or(j, "sensor_height_cm", base.sensor_height_cm()),
                         detail::get_or(j, "sensor_rows", base.sensor_rows()));
}

// ---- patterns ----

inline json to_json(const Rgb& c) { return json::array({c.r, c.g, c.b}); }

inline Rgb rgb_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParameterError("color must be an [r,g,b] array");
  Rgb c;
  std::uint8_t* dst[3] = {&c.r, &c.g, &c.b};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_number_integer() || j[i].get<int>() < 0 || j[i].get<int>() > 255)
      throw ParameterError("color channels must be integers in 0..255");
    *dst[i] = static_cast<std::uint8_t>(j[i].get<int>());
  }
  return c;
}

inline json to_json(const ProbingPattern& p) {
  return {{"shape", to_string(p.shape())},
          {"fg", to_json(p.foreground())},
          {"bg", to_json(p.background())},
          {"physical_height_cm", p.physical_height_cm()},
          {"seed", p.seed()},
          {"text", p.text_payload()}};
}

inline ProbingPattern pattern_from_json(const json& j) {
  detail::only_keys(j, {"shape", "fg", "bg", "physical_height_cm", "seed", "text"}, "pattern");
  const Shape shape = shape_from_string(detail::get_or<std::string>(j, "shape", "diamond"));
  const Rgb fg = j.contains("fg") ? rgb_from_json(j.at("fg")) : kBlack;
  const Rgb bg = j.contains("bg") ? rgb_from_json(j.at("bg")) : kWhite;
  return ProbingPattern(shape, fg, bg, detail::get_or(j, "physical_height_cm", 14.5),
                        detail::get_or<std::string>(j, "text", ""),
                        detail::get_or<std::uint64_t>(j, "seed", 0));
}

// ---- pipeline config ----

inline json to_json(const PipelineConfig& c) {
  return {{"geometry", to_json(c.geometry)},
          {"range_factor", c.range_factor},
          {"steps", c.steps},
          {"ncc_threshold", c.ncc_threshold},
          {"edge_cut", c.edge_cut},
          {"iris_radius_band", json::array({c.iris_band_min, c.iris_band_max})},
          {"eye_combination", c.combination == EyeCombination::max ? "max" : "min"},
          {"match_mode", c.match_mode == MatchMode::binary ? "binary" : "gray"}};
}

// Keys present in `j` override `base`.
inline PipelineConfig pipeline_from_json(const json& j, PipelineConfig base = {}) {
  detail::only_keys(j,
                    {"geometry", "range_factor", "steps", "ncc_threshold", "edge_cut",
                     "iris_radius_band", "eye_combination", "match_mode"},
                    "pipeline config");
  if (j.contains("geometry")) base.geometry = geometry_from_json(j.at("geometry"), base.geometry);
  base.range_factor = detail::get_or(j, "range_factor", base.range_factor);
  base.steps = detail::get_or(j, "steps", base.steps);
  base.ncc_threshold = detail::get_or(j, "ncc_threshold", base.ncc_threshold);
  base.edge_cut = detail::get_or(j, "edge_cut", base.edge_cut);
  if (j.contains("iris_radius_band")) {
    const auto& b = j.at("iris_radius_band");
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
      throw ParameterError("iris_radius_band must be [min, max]");
    base.iris_band_min = b[0].get<double>();
    base.iris_band_max = b[1].get<double>();
  }
  if (j.contains("eye_combination")) {
    const auto s = detail::get_or<std::string>(j, "eye_combination", "max");
    if (s != "max" && s != "min") throw ParameterError("eye_combination must be max or min");
    base.combination = s == "max" ? EyeCombination::max : EyeCombination::min;
  }
  if (j.contains("match_mode")) {
    const auto s = detail::get_or<std::string>(j, "match_mode", "binary");
    if (s != "binary" && s != "gray") throw ParameterError("match_mode must be binary or gray");
    base.match_mode = s == "binary" ? MatchMode::binary : MatchMode::gray;
  }
  base.validate();
  return base;
}

// ---- landmarks ----

inline json to_json(const Point& p) { return json::array({p.x, p.y}); }

inline Point point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParameterError("point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const Box& b) { return json::array({b.x, b.y, b.width, b.height}); }

inline Box box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParameterError("box must be [x, y, width, height]");
  for (const auto& v : j)
    if (!v.is_number_integer()) throw ParameterError("box entries must be integers");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

inline json to_json(const std::optional<EyeLandmarks>& lm) {
  if (!lm) return {{"face", false}, {"eyes", json::array()}};
  json eyes = json::array();
  for (const auto& e : lm->eyes)
    eyes.push_back({{"label", to_string(e.label)},
                    {"inner", to_json(e.inner)},
                    {"outer", to_json(e.outer)},
                    {"box", to_json(e.box)}});
  return {{"face", true}, {"eyes", eyes}};
}

// {"face": false} or an empty eye list means no face. Unrelated keys (e.g.
// a simulator truth sidecar's "truth" block) are ignored.
inline std::optional<EyeLandmarks> landmarks_from_json(const json& j) {
  if (!j.is_object()) throw ParameterError("landmarks must be a JSON object");
  if (j.contains("face") && j.at("face").is_boolean() && !j.at("face").get<bool>())
    return std::nullopt;
  if (!j.contains("eyes") || !j.at("eyes").is_array())
    throw ParameterError("landmarks need an 'eyes' array");
  EyeLandmarks lm;
  for (const auto& e : j.at("eyes")) {
    if (!e.is_object() || !e.contains("label") || !e.contains("inner") || !e.contains("outer") ||
        !e.contains("box"))
      throw ParameterError("each eye needs label, inner, outer and box");
    lm.eyes.push_back({eye_label_from_string(e.at("label").get<std::string>()),
                       point_from_json(e.at("inner")), point_from_json(e.at("outer")),
                       box_from_json(e.at("box"))});
  }
  if (lm.eyes.empty()) return std::nullopt;
  return lm;
}

// ---- verdicts ----

inline json to_json(const EyeResult& e) {
  if (e.match)
    return {{"label", to_string(e.label)},
            {"u", e.match->u},
            {"v", e.match->v},
            {"scale_index", e.match->scale_index},
            {"score", e.match->score}};
  return {{"label", to_string(e.label)}, {"error", e.error.value_or("not analyzed")}};
}

inline json to_json(const ProbeVerdict& v) {
  json eyes = json::array();
  for (const auto& e : v.eyes) eyes.push_back(to_json(e));
  json out = {{"decision", to_string(v.decision)},
              {"best_score", v.decision == Decision::inconclusive ? json(nullptr)
                                                                  : json(v.best_score)},
              {"threshold", v.threshold},
              {"eyes", eyes}};
  if (v.failure_reason) out["failure_reason"] = *v.failure_reason;
  return out;
}

inline ProbeVerdict verdict_from_json(const json& j) {
  ProbeVerdict v;
  v.decision = decision_from_string(j.at("decision").get<std::string>());
  v.best_score = j.at("best_score").is_null() ? 0.0 : j.at("best_score").get<double>();
  v.threshold = j.at("threshold").get<double>();
  for (const auto& e : j.at("eyes")) {
    EyeResult r{eye_label_from_string(e.at("label").get<std::string>()), std::nullopt,
                std::nullopt};
    if (e.contains("error"))
      r.error = e.at("error").get<std::string>();
    else
      r.match = MatchResult{e.at("u").get<std::size_t>(), e.at("v").get<std::size_t>(),
                            e.at("scale_index").get<std::size_t>(), e.at("score").get<double>()};
    v.eyes.push_back(std::move(r));
  }
  if (j.contains("failure_reason")) v.failure_reason = j.at("failure_reason").get<std::string>();
  return v;
}

// ---- simulator ----

inline json to_json(const SceneParams& p) {
  return {{"geometry", to_json(p.geometry)},       {"pattern", to_json(p.pattern)},
          {"ambient_level", p.ambient_level},      {"noise_sigma", p.noise_sigma},
          {"blur_radius_px", p.blur_radius_px},    {"deepfake", p.deepfake},
          {"gaze_offset_px", p.gaze_offset_px},    {"seed", p.seed}};
}

inline SceneParams scene_from_json(const json& j, SceneParams base = {}) {
  detail::only_keys(j,
                    {"geometry", "pattern", "ambient_level", "noise_sigma", "blur_radius_px",
                     "deepfake", "gaze_offset_px", "seed"},
                    "scene");
  if (j.contains("geometry")) base.geometry = geometry_from_json(j.at("geometry"), base.geometry);
  if (j.contains("pattern")) base.pattern = pattern_from_json(j.at("pattern"));
  base.ambient_level = detail::get_or(j, "ambient_level", base.ambient_level);
  base.noise_sigma = detail::get_or(j, "noise_sigma", base.noise_sigma);
  base.blur_radius_px = detail::get_or(j, "blur_radius_px", base.blur_radius_px);
  base.deepfake = detail::get_or(j, "deepfake", base.deepfake);
  base.gaze_offset_px = detail::get_or(j, "gaze_offset_px", base.gaze_offset_px);
  base.seed = detail::get_or(j, "seed", base.seed);
  base.validate();
  return base;
}

// Truth sidecar; doubles as a landmarks file.
inline json truth_to_json(const SimFrame& f, const SceneParams& p) {
  json j = to_json(std::optional<EyeLandmarks>(f.landmarks));
  json truth = json::array();
  for (const auto& e : f.eyes)
    truth.push_back({{"label", to_string(e.label)},
                     {"iris", {{"cx", e.iris.cx}, {"cy", e.iris.cy}, {"radius", e.iris.radius}}},
                     {"reflection", e.reflection ? to_json(*e.reflection) : json(nullptr)}});
  j["truth"] = truth;
  j["scene"] = to_json(p);
  return j;
}

struct SweepConfig {
  SweepGrid grid;
  std::size_t frames_per_cell = 10;
  PipelineConfig pipeline;
};

// {"base": scene, "axes": {...}, "frames_per_cell": n, "pipeline": {...}}.
// The base scene's seed seeds the whole sweep.
inline SweepConfig sweep_config_from_json(const json& j) {
  detail::only_keys(j, {"base", "axes", "frames_per_cell", "pipeline"}, "sweep config");
  SweepConfig cfg;
  if (j.contains("base")) cfg.grid.base = scene_from_json(j.at("base"));
  if (j.contains("pipeline")) cfg.pipeline = pipeline_from_json(j.at("pipeline"));
  const auto fpc = detail::get_or<long long>(j, "frames_per_cell", 10);
  if (fpc <= 0) throw ParameterError("frames_per_cell must be positive");
  cfg.frames_per_cell = static_cast<std::size_t>(fpc);
  if (j.contains("axes")) {
    const auto& a = j.at("axes");
    detail::only_keys(a,
                      {"shape", "contrast", "ambient_level", "noise_sigma", "blur_radius_px",
                       "gaze_offset_px", "deepfake"},
                      "sweep axes");
    auto list = [&](const char* key) {
      const auto& v = a.at(key);
      if (!v.is_array() || v.empty())
        throw ParameterError(std::string("axis '") + key + "' must be a non-empty array");
      return v;
    };
    try {
      if (a.contains("shape"))
        for (const auto& s : list("shape")) cfg.grid.shapes.push_back(shape_from_string(s.get<std::string>()));
      if (a.contains("contrast"))
        for (const auto& v : list("contrast")) {
          const double c = v.get<double>();
          if (!(c > 0.0 && c <= 1.0)) throw ParameterError("contrast values must lie in (0,1]");
          cfg.grid.contrasts.push_back(c);
        }
      if (a.contains("ambient_level"))
        for (const auto& v : list("ambient_level")) cfg.grid.ambient_levels.push_back(v.get<int>());
      if (a.contains("noise_sigma"))
        for (const auto& v : list("noise_sigma")) cfg.grid.noise_sigmas.push_back(v.get<double>());
      if (a.contains("blur_radius_px"))
        for (const auto& v : list("blur_radius_px")) cfg.grid.blur_radii.push_back(v.get<double>());
      if (a.contains("gaze_offset_px"))
        for (const auto& v : list("gaze_offset_px")) cfg.grid.gaze_offsets.push_back(v.get<int>());
      if (a.contains("deepfake"))
        for (const auto& v : list("deepfake")) cfg.grid.deepfake.push_back(v.get<bool>());
    } catch (const json::exception& e) {
      throw ParameterError(std::string("bad sweep axis value: ") + e.what());
    }
    for (std::size_t i = 0; i < cfg.grid.cell_count(); ++i) cfg.grid.cell(i).validate();
  }
  return cfg;
}

// ---- CSV ----

inline std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

inline constexpr std::string_view kSweepCsvHeader =
    "cell,frame,seed,shape,contrast,ambient_level,noise_sigma,blur_radius_px,gaze_offset_px,"
    "deepfake,best_score,decision,error";

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out(kSweepCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    const auto& p = r.params;
    out += std::to_string(r.cell) + ',' + std::to_string(r.frame) + ',' + std::to_string(p.seed) +
           ',' + std::string(to_string(p.pattern.shape())) + ',' +
           format_double(global_contrast(p.pattern), 6) + ',' + std::to_string(p.ambient_level) +
           ',' + format_double(p.noise_sigma, 6) + ',' + format_double(p.blur_radius_px, 6) + ',' +
           std::to_string(p.gaze_offset_px) + ',' + (p.deepfake ? "1" : "0") + ',' +
           (r.best_score ? format_double(*r.best_score, 9) : std::string()) + ',' +
           std::string(to_string(r.decision)) + ',' + csv_escape(r.error) + '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace detail

// Labeled scores from a sweep CSV; rows without a score are skipped.
inline std::vector<LabeledScore> scores_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("sweep CSV is empty");
  const auto header = detail::split_csv_line(line);
  auto column = [&](std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw FormatError("sweep CSV lacks column '" + std::string(name) + "'");
  };
  const std::size_t score_col = column("best_score");
  const std::size_t deep_col = column("deepfake");
  std::vector<LabeledScore> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) throw FormatError("sweep CSV row has the wrong field count");
    if (f[score_col].empty()) continue;
    try {
      out.push_back({std::stod(f[score_col]), f[deep_col] == "0"});
    } catch (const std::exception&) {
      throw FormatError("unparseable best_score '" + f[score_col] + "'");
    }
  }
  return out;
}

}  // namespace cornea::io
