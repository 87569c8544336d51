#pragma once

// Session-oriented HTTP API behind the operator console. Each session owns a
// randomized probing pattern; frames submitted to it are verified in arrival
// order and their score records are fanned out to event-stream readers.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "cornea/errors.hpp"
#include "cornea/json_io.hpp"
#include "cornea/landmarks.hpp"
#include "cornea/patterns.hpp"
#include "cornea/pipeline.hpp"
#include "cornea/png.hpp"
#include "cornea/pnm.hpp"
#include "cornea/simulator.hpp"

namespace cornea::service {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct HttpError : Error {
  int status;
  HttpError(int s, const std::string& what) : Error(what), status(s) {}
};

struct ServiceOptions {
  PipelineConfig defaults;
  PatternConstraints constraints;
  std::chrono::seconds session_ttl{900};
  std::string audit_log_path;  // empty disables the audit log
  std::size_t pattern_raster_px = 512;
  // Suggested probe length handed to the console.
  int probe_frames = 10;
  int probe_duration_ms = 2000;
  std::function<std::uint64_t()> entropy;  // defaults to std::random_device
  std::function<Clock::time_point()> clock;
};

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline RgbImage decode_frame(const std::string& bytes) {
  if (png::looks_like_png(bytes)) return png::decode_rgb(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return pnm::decode_rgb(bytes);
  throw FormatError("frame is neither PPM/PGM nor PNG");
}

// Crop boxes of the simulator's face layout, for desk demos without a
// landmark detector.
inline const EyeLandmarks& simulator_layout() {
  static const EyeLandmarks lm = render_scene(SceneParams{}).landmarks;
  return lm;
}

}  // namespace detail

struct Session {
  std::string id;
  std::uint64_t seed = 0;
  ProbingPattern pattern;
  PipelineConfig config;
  std::optional<EyeLandmarks> demo_landmarks;
  std::string created_at;

  std::mutex m;
  std::condition_variable cv;
  // Ticket queue: work runs strictly in the order requests arrived.
  std::uint64_t next_ticket = 0;
  std::uint64_t serving = 0;
  std::vector<json> records;
  std::vector<ProbeVerdict> verdicts;
  bool concluded = false;
  json final_verdict;
  Clock::time_point last_seen;
};

class ProbeService {
 public:
  explicit ProbeService(ServiceOptions opts = {}) : opts_(std::move(opts)) {
    if (!opts_.entropy)
      opts_.entropy = [] {
        static std::random_device rd;
        return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
      };
    if (!opts_.clock) opts_.clock = [] { return Clock::now(); };
    opts_.defaults.validate();
  }

  ~ProbeService() { shutdown(); }

  // Wakes event streams so they finish; call before stopping the server.
  void shutdown() {
    stopping_ = true;
    std::lock_guard lk(store_m_);
    for (auto& [_, s] : sessions_) {
      std::lock_guard sl(s->m);
      s->cv.notify_all();
    }
  }

  json create_session(const std::string& body) {
    evict_expired();
    json req = json::object();
    if (!body.empty()) {
      req = io::parse(body);
      io::detail::only_keys(req, {"config", "constraints", "demo_landmarks"}, "session request");
    }
    auto s = std::make_shared<Session>();
    s->config = req.contains("config") ? io::pipeline_from_json(req["config"], opts_.defaults)
                                       : opts_.defaults;
    PatternConstraints constraints = opts_.constraints;
    if (req.contains("constraints")) {
      const auto& c = req["constraints"];
      io::detail::only_keys(c, {"shapes", "colors"}, "constraints");
      if (c.contains("shapes")) {
        std::vector<Shape> shapes;
        for (const auto& v : c["shapes"]) shapes.push_back(shape_from_string(v.get<std::string>()));
        constraints.shapes = shapes;
      }
      if (c.contains("colors")) {
        std::vector<Rgb> colors;
        for (const auto& v : c["colors"]) colors.push_back(io::rgb_from_json(v));
        constraints.colors = colors;
      }
    }
    if (req.contains("demo_landmarks")) {
      const auto& d = req["demo_landmarks"];
      if (d.is_boolean()) {
        if (d.get<bool>()) s->demo_landmarks = detail::simulator_layout();
      } else {
        s->demo_landmarks = io::landmarks_from_json(d);
      }
    }

    s->seed = opts_.entropy();
    s->pattern = random_pattern(s->seed, constraints);
    s->created_at = detail::utc_timestamp();
    s->last_seen = opts_.clock();
    {
      std::lock_guard lk(store_m_);
      do {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(opts_.entropy()));
        s->id = buf;
      } while (sessions_.count(s->id));
      sessions_[s->id] = s;
    }
    return {{"id", s->id},
            {"seed", s->seed},
            {"pattern", io::to_json(s->pattern)},
            {"pattern_url", "/sessions/" + s->id + "/pattern"},
            {"events_url", "/sessions/" + s->id + "/events"},
            {"config", io::to_json(s->config)},
            {"probe", {{"frames", opts_.probe_frames}, {"duration_ms", opts_.probe_duration_ms}}}};
  }

  std::string pattern_raster(const std::string& id, std::size_t size_px = 0) {
    auto s = find(id);
    if (size_px == 0) size_px = opts_.pattern_raster_px;
    if (size_px < 16 || size_px > 4096) throw HttpError(400, "size must lie in 16..4096");
    return pnm::encode(rasterize(s->pattern, size_px).pixels);
  }

  // landmarks_json empty means "use the session's demo landmarks".
  json submit_frame(const std::string& id, const std::string& frame_bytes,
                    const std::string& landmarks_json) {
    auto s = find(id);
    Turn turn(*s);
    if (s->concluded) throw HttpError(409, "session " + id + " is concluded");

    std::optional<EyeLandmarks> lm;
    if (!landmarks_json.empty()) {
      lm = io::landmarks_from_json(io::parse(landmarks_json));
    } else if (s->demo_landmarks) {
      lm = s->demo_landmarks;
    } else {
      throw HttpError(400, "landmarks are required (or create the session with demo_landmarks)");
    }
    const RgbImage frame = detail::decode_frame(frame_bytes);
    const ProbeVerdict v = verify_frame(frame, s->pattern, s->config, FixedLandmarkProvider(lm));

    json rec = io::to_json(v);
    std::lock_guard lk(s->m);
    rec["index"] = s->records.size();
    s->records.push_back(rec);
    s->verdicts.push_back(v);
    s->last_seen = opts_.clock();
    s->cv.notify_all();
    return rec;
  }

  json conclude(const std::string& id) {
    auto s = find(id);
    Turn turn(*s);
    json audit;
    {
      std::lock_guard lk(s->m);
      if (s->concluded) return s->final_verdict;
      if (s->verdicts.empty()) throw HttpError(400, "no frames were submitted");
      s->final_verdict = io::to_json(aggregate_verdicts(s->verdicts, s->config.ncc_threshold));
      s->final_verdict["frames"] = s->verdicts.size();
      s->concluded = true;
      s->last_seen = opts_.clock();
      s->cv.notify_all();
      audit = audit_record(*s, "concluded");
    }
    append_audit(audit);
    return s->final_verdict;
  }

  std::size_t session_count() {
    std::lock_guard lk(store_m_);
    return sessions_.size();
  }

  // Drops sessions idle for longer than the TTL; unconcluded ones are
  // audited as expired.
  void evict_expired() {
    const auto now = opts_.clock();
    std::vector<json> audits;
    {
      std::lock_guard lk(store_m_);
      for (auto it = sessions_.begin(); it != sessions_.end();) {
        std::lock_guard sl(it->second->m);
        if (now - it->second->last_seen > opts_.session_ttl) {
          if (!it->second->concluded) audits.push_back(audit_record(*it->second, "expired"));
          it->second->cv.notify_all();
          it = sessions_.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (const auto& a : audits) append_audit(a);
  }

  void mount(httplib::Server& srv) {
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type"}});
    srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.status = 204;
    });
    srv.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"status", "ok"}, {"sessions", session_count()}}.dump(),
                      "application/json");
    });
    srv.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        res.status = 201;
        res.set_content(create_session(req.body).dump(), "application/json");
      });
    });
    srv.Get(R"(/sessions/([0-9a-f]+)/pattern)", [this](const httplib::Request& req,
                                                       httplib::Response& res) {
      guarded(res, [&] {
        std::size_t size = 0;
        if (req.has_param("size")) {
          try {
            size = std::stoul(req.get_param_value("size"));
          } catch (const std::exception&) {
            throw HttpError(400, "size must be an integer");
          }
        }
        res.set_content(pattern_raster(req.matches[1], size), "image/x-portable-pixmap");
      });
    });
    srv.Post(R"(/sessions/([0-9a-f]+)/frames)", [this](const httplib::Request& req,
                                                      httplib::Response& res) {
      guarded(res, [&] {
        std::string frame, landmarks;
        if (req.is_multipart_form_data()) {
          if (!req.has_file("frame")) throw HttpError(400, "multipart body needs a 'frame' part");
          frame = req.get_file_value("frame").content;
          if (req.has_file("landmarks")) landmarks = req.get_file_value("landmarks").content;
        } else {
          frame = req.body;
        }
        res.set_content(submit_frame(req.matches[1], frame, landmarks).dump(), "application/json");
      });
    });
    srv.Post(R"(/sessions/([0-9a-f]+)/conclude)", [this](const httplib::Request& req,
                                                        httplib::Response& res) {
      guarded(res, [&] { res.set_content(conclude(req.matches[1]).dump(), "application/json"); });
    });
    srv.Get(R"(/sessions/([0-9a-f]+)/events)", [this](const httplib::Request& req,
                                                     httplib::Response& res) {
      guarded(res, [&] { stream(find(req.matches[1]), res); });
    });
  }

 private:
  // Holds a session's turn for the lifetime of one request.
  struct Turn {
    Session& s;
    explicit Turn(Session& session) : s(session) {
      std::unique_lock lk(s.m);
      const auto ticket = s.next_ticket++;
      s.cv.wait(lk, [&] { return s.serving == ticket; });
    }
    ~Turn() {
      std::lock_guard lk(s.m);
      ++s.serving;
      s.cv.notify_all();
    }
  };

  std::shared_ptr<Session> find(const std::string& id) {
    evict_expired();
    std::lock_guard lk(store_m_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw HttpError(404, "unknown session " + id);
    std::lock_guard sl(it->second->m);
    it->second->last_seen = opts_.clock();
    return it->second;
  }

  void stream(std::shared_ptr<Session> s, httplib::Response& res) {
    auto cursor = std::make_shared<std::size_t>(0);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [this, s, cursor](std::size_t, httplib::DataSink& sink) {
          std::string out;
          bool done = false;
          {
            std::unique_lock lk(s->m);
            s->cv.wait_for(lk, std::chrono::milliseconds(200), [&] {
              return *cursor < s->records.size() || s->concluded || stopping_;
            });
            for (; *cursor < s->records.size(); ++*cursor)
              out += "event: score\nid: " + std::to_string(*cursor) +
                     "\ndata: " + s->records[*cursor].dump() + "\n\n";
            if (s->concluded) {
              out += "event: verdict\ndata: " + s->final_verdict.dump() + "\n\n";
              done = true;
            }
          }
          if (!out.empty() && !sink.write(out.data(), out.size())) return false;
          if (done || stopping_) {
            sink.done();
            return true;
          }
          return sink.is_writable();
        });
  }

  template <typename F>
  static void guarded(httplib::Response& res, F&& f) {
    auto fail = [&](int status, const std::string& msg) {
      res.status = status;
      res.set_content(json{{"error", msg}}.dump(), "application/json");
    };
    try {
      f();
    } catch (const HttpError& e) {
      fail(e.status, e.what());
    } catch (const Error& e) {
      fail(400, e.what());
    } catch (const json::exception& e) {
      fail(400, e.what());
    } catch (const std::exception& e) {
      fail(500, e.what());
    }
  }

  json audit_record(const Session& s, const char* state) const {
    json scores = json::array();
    for (const auto& r : s.records) scores.push_back(r["best_score"]);
    return {{"id", s.id},
            {"seed", s.seed},
            {"pattern", io::to_json(s.pattern)},
            {"threshold", s.config.ncc_threshold},
            {"created_at", s.created_at},
            {"closed_at", detail::utc_timestamp()},
            {"state", state},
            {"scores", scores},
            {"verdict", s.concluded ? s.final_verdict : json(nullptr)}};
  }

  void append_audit(const json& rec) {
    if (opts_.audit_log_path.empty()) return;
    std::lock_guard lk(audit_m_);
    std::ofstream out(opts_.audit_log_path, std::ios::app);
    out << rec.dump() << '\n';
  }

  ServiceOptions opts_;
  std::mutex store_m_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex audit_m_;
  std::atomic<bool> stopping_{false};
};

}  // namespace cornea::service
