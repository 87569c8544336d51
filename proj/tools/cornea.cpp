// Command-line front end: pattern generation, frame analysis, simulation
// sweeps, threshold calibration and the HTTP service.

#include <csignal>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "cornea/json_io.hpp"
#include "cornea/pipeline.hpp"
#include "cornea/pnm.hpp"
#include "cornea/service.hpp"
#include "cornea/simulator.hpp"

namespace fs = std::filesystem;
using namespace cornea;
using nlohmann::json;

namespace {

// Verdict exit codes; 1 is reserved for operational errors.
int exit_code(Decision d) {
  switch (d) {
    case Decision::authentic: return 0;
    case Decision::suspected_deepfake: return 2;
    case Decision::inconclusive: return 3;
  }
  return 1;
}

json read_json(const std::string& path) { return io::parse(pnm::read_file(path)); }

std::string sidecar(const std::string& path) {
  return fs::path(path).replace_extension(".json").string();
}

Rgb parse_rgb(const std::string& s) {
  std::vector<int> v;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      v.push_back(std::stoi(part));
    } catch (const std::exception&) {
      throw ParameterError("color '" + s + "' must be r,g,b");
    }
  }
  if (v.size() != 3) throw ParameterError("color '" + s + "' must be r,g,b");
  for (int c : v)
    if (c < 0 || c > 255) throw ParameterError("color channels must lie in 0..255");
  return Rgb{static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]),
             static_cast<std::uint8_t>(v[2])};
}

// Config file: {"pipeline": {...}, "scene": {...}}. Flags applied afterwards win.
struct CliConfig {
  PipelineConfig pipeline;
  SceneParams scene;
};

CliConfig load_config(const std::string& path) {
  CliConfig cfg;
  if (path.empty()) return cfg;
  const json j = read_json(path);
  io::detail::only_keys(j, {"pipeline", "scene"}, "config file");
  if (j.contains("pipeline")) cfg.pipeline = io::pipeline_from_json(j.at("pipeline"));
  if (j.contains("scene")) cfg.scene = io::scene_from_json(j.at("scene"));
  return cfg;
}

struct PipelineFlags {
  std::optional<double> threshold;
  std::optional<std::string> mode;
  std::optional<std::string> combine;

  void add(CLI::App* cmd) {
    cmd->add_option("--threshold", threshold, "NCC decision threshold")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--mode", mode, "Matching mode")->check(CLI::IsMember({"binary", "gray"}));
    cmd->add_option("--combine", combine, "Eye combination")->check(CLI::IsMember({"max", "min"}));
  }

  void apply(PipelineConfig& c) const {
    if (threshold) c.ncc_threshold = *threshold;
    if (mode) c.match_mode = *mode == "gray" ? MatchMode::gray : MatchMode::binary;
    if (combine) c.combination = *combine == "min" ? EyeCombination::min : EyeCombination::max;
    c.validate();
  }
};

// ---- pattern ----

struct PatternArgs {
  std::string shape = "diamond";
  std::string fg = "0,0,0";
  std::string bg = "255,255,255";
  std::string text;
  std::size_t size = 512;
  double height_cm = 14.5;
  bool random = false;
  std::uint64_t seed = 0;
  std::vector<std::string> shapes;
  std::string out = "pattern.ppm";
  std::string descriptor;
  std::string mask;
};

int cmd_pattern(const PatternArgs& a) {
  ProbingPattern p;
  if (a.random) {
    PatternConstraints c;
    if (!a.shapes.empty()) {
      c.shapes.emplace();
      for (const auto& s : a.shapes) c.shapes->push_back(shape_from_string(s));
    }
    p = random_pattern(a.seed, c);
  } else {
    p = ProbingPattern(shape_from_string(a.shape), parse_rgb(a.fg), parse_rgb(a.bg), a.height_cm,
                       a.text, a.seed);
  }
  const PatternRaster raster = rasterize(p, a.size);
  pnm::write_file(a.out, pnm::encode(raster.pixels));
  const json desc = io::to_json(p);
  pnm::write_file(a.descriptor.empty() ? sidecar(a.out) : a.descriptor, desc.dump(2) + "\n");
  if (!a.mask.empty()) pnm::write_file(a.mask, pnm::encode(binarize_pattern(raster)));
  std::cout << desc.dump() << "\n";
  return 0;
}

// ---- render ----

struct RenderArgs {
  std::string config;
  std::string pattern;
  std::optional<std::string> shape;
  std::optional<double> contrast;
  std::optional<bool> deepfake;
  std::optional<std::uint64_t> seed;
  std::optional<int> ambient;
  std::optional<double> noise;
  std::optional<double> blur;
  std::optional<int> gaze;
  std::string out = "frame.ppm";
  std::string truth;
};

int cmd_render(const RenderArgs& a) {
  SceneParams p = load_config(a.config).scene;
  if (!a.pattern.empty()) p.pattern = io::pattern_from_json(read_json(a.pattern));
  if (a.contrast)
    p.pattern = pattern_with_contrast(a.shape ? shape_from_string(*a.shape) : p.pattern.shape(),
                                      *a.contrast, p.pattern.physical_height_cm());
  else if (a.shape)
    p.pattern = ProbingPattern(shape_from_string(*a.shape), p.pattern.foreground(),
                               p.pattern.background(), p.pattern.physical_height_cm(),
                               p.pattern.text_payload(), p.pattern.seed());
  if (a.deepfake) p.deepfake = *a.deepfake;
  if (a.seed) p.seed = *a.seed;
  if (a.ambient) p.ambient_level = *a.ambient;
  if (a.noise) p.noise_sigma = *a.noise;
  if (a.blur) p.blur_radius_px = *a.blur;
  if (a.gaze) p.gaze_offset_px = *a.gaze;
  p.validate();

  const SimFrame f = render_scene(p);
  pnm::write_file(a.out, pnm::encode(f.frame));
  const json truth = io::truth_to_json(f, p);
  pnm::write_file(a.truth.empty() ? sidecar(a.out) : a.truth, truth.dump(2) + "\n");
  std::cout << truth.dump() << "\n";
  return 0;
}

// ---- analyze ----

struct AnalyzeArgs {
  std::vector<std::string> frames;
  std::string pattern;
  std::vector<std::string> landmarks;
  bool from_truth = false;
  std::string config;
  PipelineFlags flags;
  bool per_frame = false;
};

int cmd_analyze(const AnalyzeArgs& a) {
  PipelineConfig cfg = load_config(a.config).pipeline;
  a.flags.apply(cfg);
  const ProbingPattern pattern = io::pattern_from_json(read_json(a.pattern));

  std::vector<std::string> lm_paths = a.landmarks;
  if (a.from_truth) {
    if (!lm_paths.empty()) throw ParameterError("use either --landmarks or --landmarks-from-truth");
    for (const auto& f : a.frames) lm_paths.push_back(sidecar(f));
  }
  if (lm_paths.empty()) throw ParameterError("landmarks are required");
  if (lm_paths.size() != 1 && lm_paths.size() != a.frames.size())
    throw ParameterError("give one landmarks file, or one per frame");

  std::vector<std::optional<EyeLandmarks>> lms;
  for (const auto& p : lm_paths) lms.push_back(io::landmarks_from_json(read_json(p)));
  const FixedLandmarkProvider provider(lms);

  std::vector<ProbeVerdict> verdicts;
  for (std::size_t i = 0; i < a.frames.size(); ++i)
    verdicts.push_back(
        verify_frame(pnm::decode_rgb(pnm::read_file(a.frames[i])), pattern, cfg, provider, i));
  const ProbeVerdict v = aggregate_verdicts(verdicts, cfg.ncc_threshold);

  json out = io::to_json(v);
  out["frames"] = verdicts.size();
  if (a.per_frame) {
    out["per_frame"] = json::array();
    for (const auto& f : verdicts) out["per_frame"].push_back(io::to_json(f));
  }
  std::cout << out.dump() << "\n";
  return exit_code(v.decision);
}

// ---- simulate ----

struct SimulateArgs {
  std::string config;
  std::optional<std::size_t> frames_per_cell;
  std::optional<std::uint64_t> seed;
  std::string out = "sweep.csv";
  unsigned threads = 1;
};

int cmd_simulate(const SimulateArgs& a) {
  io::SweepConfig sc;
  if (a.config.empty()) {
    sc.grid.deepfake = {false, true};
  } else {
    sc = io::sweep_config_from_json(read_json(a.config));
  }
  if (a.frames_per_cell) sc.frames_per_cell = *a.frames_per_cell;
  if (a.seed) sc.grid.base.seed = *a.seed;

  const auto rows = sweep(sc.grid, sc.frames_per_cell, sc.pipeline, a.threads);
  pnm::write_file(a.out, io::sweep_csv(rows));

  json cells = json::array();
  for (std::size_t c = 0; c < sc.grid.cell_count(); ++c) {
    const SceneParams p = sc.grid.cell(c);
    std::size_t scored = 0;
    double sum = 0;
    std::map<Decision, std::size_t> counts;
    for (std::size_t f = 0; f < sc.frames_per_cell; ++f) {
      const auto& r = rows[c * sc.frames_per_cell + f];
      ++counts[r.decision];
      if (r.best_score) {
        ++scored;
        sum += *r.best_score;
      }
    }
    cells.push_back({{"cell", c},
                     {"shape", to_string(p.pattern.shape())},
                     {"contrast", global_contrast(p.pattern)},
                     {"ambient_level", p.ambient_level},
                     {"noise_sigma", p.noise_sigma},
                     {"blur_radius_px", p.blur_radius_px},
                     {"gaze_offset_px", p.gaze_offset_px},
                     {"deepfake", p.deepfake},
                     {"frames", sc.frames_per_cell},
                     {"scored", scored},
                     {"mean_score", scored ? json(sum / static_cast<double>(scored)) : json(nullptr)},
                     {"authentic", counts[Decision::authentic]},
                     {"suspected_deepfake", counts[Decision::suspected_deepfake]},
                     {"inconclusive", counts[Decision::inconclusive]}});
  }
  std::cout << json{{"rows", rows.size()}, {"csv", a.out}, {"cells", cells}}.dump() << "\n";
  return 0;
}

// ---- calibrate ----

struct CalibrateArgs {
  std::string csv;
  std::string write_config;
};

int cmd_calibrate(const CalibrateArgs& a) {
  const auto scores = io::scores_from_csv(pnm::read_file(a.csv));
  const Calibration c = calibrate_threshold(scores);
  std::size_t real = 0;
  for (const auto& s : scores) real += s.real;

  if (!a.write_config.empty()) {
    json cfg = fs::exists(a.write_config) ? read_json(a.write_config) : json::object();
    PipelineConfig p = load_config(fs::exists(a.write_config) ? a.write_config : "").pipeline;
    p.ncc_threshold = c.threshold;
    p.validate();
    cfg["pipeline"] = io::to_json(p);
    pnm::write_file(a.write_config, cfg.dump(2) + "\n");
  }
  std::cout << json{{"threshold", c.threshold},
                    {"youden_j", c.youden_j},
                    {"tpr", c.tpr},
                    {"fpr", c.fpr},
                    {"real", real},
                    {"deepfake", scores.size() - real}}
                   .dump()
            << "\n";
  return 0;
}

// ---- serve ----

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string config;
  std::string audit_log;
  long ttl_s = 900;
  std::size_t raster_px = 512;
};

int cmd_serve(const ServeArgs& a) {
  service::ServiceOptions opts;
  opts.defaults = load_config(a.config).pipeline;
  opts.audit_log_path = a.audit_log;
  opts.session_ttl = std::chrono::seconds(a.ttl_s);
  opts.pattern_raster_px = a.raster_px;

  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

  service::ProbeService svc(opts);
  httplib::Server srv;
  svc.mount(srv);
  if (!srv.bind_to_port(a.host, a.port)) throw Error("cannot bind " + a.host + ":" + std::to_string(a.port));

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&sigs, &sig);
    svc.shutdown();
    srv.stop();
  });
  std::cout << json{{"listening", a.host + ":" + std::to_string(a.port)}}.dump() << std::endl;
  srv.listen_after_bind();
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active corneal-reflection DeepFake probe"};
  app.require_subcommand(1);

  PatternArgs pa;
  auto* pattern = app.add_subcommand("pattern", "Generate a probing pattern raster and descriptor");
  pattern->add_option("--shape", pa.shape, "diamond|triangle|circle|cross|square|text");
  pattern->add_option("--fg", pa.fg, "Foreground color r,g,b");
  pattern->add_option("--bg", pa.bg, "Background color r,g,b");
  pattern->add_option("--text", pa.text, "Payload for --shape text");
  pattern->add_option("--size", pa.size, "Raster side in pixels")->check(CLI::Range(4, 8192));
  pattern->add_option("--height-cm", pa.height_cm, "Physical on-screen height");
  pattern->add_flag("--random", pa.random, "Draw a random pattern from --seed");
  pattern->add_option("--seed", pa.seed, "Seed (recorded in the descriptor)");
  pattern->add_option("--shapes", pa.shapes, "Shapes allowed for --random")->delimiter(',');
  pattern->add_option("--out", pa.out, "Output PPM");
  pattern->add_option("--descriptor", pa.descriptor, "Output JSON (default: <out>.json)");
  pattern->add_option("--mask", pa.mask, "Also write the binarized mask as PGM");

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "Render one simulator frame with truth sidecar");
  render->add_option("--config", ra.config, "Config JSON");
  render->add_option("--pattern", ra.pattern, "Pattern descriptor JSON");
  render->add_option("--shape", ra.shape, "Pattern shape");
  render->add_option("--contrast", ra.contrast, "Gray-on-white pattern contrast")
      ->check(CLI::Range(0.0, 1.0));
  render->add_option("--deepfake", ra.deepfake, "Omit the corneal reflection (true/false)");
  render->add_option("--seed", ra.seed, "Frame seed");
  render->add_option("--ambient", ra.ambient, "Ambient level 0..5");
  render->add_option("--noise", ra.noise, "Noise sigma");
  render->add_option("--blur", ra.blur, "Box blur radius in pixels");
  render->add_option("--gaze", ra.gaze, "Maximum gaze jitter in pixels");
  render->add_option("--out", ra.out, "Output PPM");
  render->add_option("--truth", ra.truth, "Truth JSON (default: <out>.json)");

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Verify frames against a probing pattern");
  analyze->add_option("frames", aa.frames, "PPM/PGM frames")->required()->check(CLI::ExistingFile);
  analyze->add_option("--pattern", aa.pattern, "Pattern descriptor JSON")->required();
  analyze->add_option("--landmarks", aa.landmarks, "Landmarks JSON (one, or one per frame)");
  analyze->add_flag("--landmarks-from-truth", aa.from_truth,
                    "Read landmarks from each frame's simulator sidecar");
  analyze->add_option("--config", aa.config, "Config JSON");
  analyze->add_flag("--per-frame", aa.per_frame, "Include per-frame verdicts");
  aa.flags.add(analyze);

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Run a simulator sweep into a CSV");
  simulate->add_option("--config", sa.config, "Sweep config JSON");
  simulate->add_option("--frames-per-cell", sa.frames_per_cell, "Frames per grid cell")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sa.seed, "Base seed");
  simulate->add_option("--out", sa.out, "Output CSV");
  simulate->add_option("--threads", sa.threads, "Worker threads")->check(CLI::Range(1u, 256u));

  CalibrateArgs ca;
  auto* calibrate = app.add_subcommand("calibrate", "Pick the threshold maximizing Youden's J");
  calibrate->add_option("csv", ca.csv, "Sweep CSV")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--write-config", ca.write_config, "Store the threshold in this config");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP probe service");
  serve->add_option("--host", sv.host, "Bind address");
  serve->add_option("--port", sv.port, "Port")->check(CLI::Range(0, 65535));
  serve->add_option("--config", sv.config, "Config JSON supplying pipeline defaults");
  serve->add_option("--audit-log", sv.audit_log, "Append session records to this JSONL file");
  serve->add_option("--ttl", sv.ttl_s, "Idle session lifetime in seconds")->check(CLI::PositiveNumber);
  serve->add_option("--raster-size", sv.raster_px, "Default pattern raster side")
      ->check(CLI::Range(16, 4096));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*pattern) return cmd_pattern(pa);
    if (*render) return cmd_render(ra);
    if (*analyze) return cmd_analyze(aa);
    if (*simulate) return cmd_simulate(sa);
    if (*calibrate) return cmd_calibrate(ca);
    if (*serve) return cmd_serve(sv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
