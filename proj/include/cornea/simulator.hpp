#pragma once

// Deterministic synthetic webcam frames of a face in front of a screen that
// shows a probing pattern, plus the sweep/calibration harness built on them.
//
// Rendering is flat-shaded. A live eye carries the binarized pattern as an
// additive highlight on the iris, scaled to the geometry's predicted
// reflection extent; a synthesized eye carries only a small generic
// catchlight that ignores the screen.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cornea/errors.hpp"
#include "cornea/geometry.hpp"
#include "cornea/image.hpp"
#include "cornea/imageops.hpp"
#include "cornea/landmarks.hpp"
#include "cornea/patterns.hpp"
#include "cornea/pipeline.hpp"

namespace cornea {

struct SceneParams {
  ImagingGeometry geometry;
  ProbingPattern pattern;
  int ambient_level = 1;
  double noise_sigma = 0.02;
  double blur_radius_px = 0.0;
  bool deepfake = false;
  int gaze_offset_px = 2;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(ambient_level >= 0 && ambient_level <= 5, "ambient_level must be in 0..5");
    detail::require(noise_sigma >= 0.0 && noise_sigma < 0.5, "noise_sigma must be in [0, 0.5)");
    detail::require(blur_radius_px >= 0.0, "blur_radius_px must be nonnegative");
    detail::require(gaze_offset_px >= 0, "gaze_offset_px must be nonnegative");
  }
};

struct EyeTruth {
  EyeLabel label = EyeLabel::left;
  Circle iris;                   // frame coordinates
  std::optional<Box> reflection;  // stamped square; absent for deepfakes
  friend bool operator==(const EyeTruth&, const EyeTruth&) = default;
};

struct SimFrame {
  RgbImage frame;
  EyeLandmarks landmarks;
  std::vector<EyeTruth> eyes;
};

namespace sim {

inline constexpr std::size_t kFrameCols = 640;
inline constexpr std::size_t kFrameRows = 480;
inline constexpr double kIrisRadiusCm = 0.6;
inline constexpr double kReflectionGain = 0.6;
inline constexpr double kAmbientStep = 0.06;

struct Color {
  double r, g, b;
};

inline constexpr Color kBackdrop{0.24, 0.27, 0.31};
inline constexpr Color kSkin{0.90, 0.75, 0.67};
inline constexpr Color kSclera{0.89, 0.89, 0.86};
inline constexpr Color kIris{0.39, 0.27, 0.20};
inline constexpr Color kPupil{0.25, 0.19, 0.16};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Seed of frame `frame` in sweep cell `cell`.
inline std::uint64_t frame_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t frame) {
  std::uint64_t s = base;
  s ^= splitmix64(s) + cell * 0x100000001B3ull;
  s ^= splitmix64(s) + frame;
  return splitmix64(s);
}

// splitmix64 + Box-Muller; bit-reproducible everywhere, unlike the
// implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  double uniform() {  // [0,1)
    return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
  }
  int uniform_int(int lo, int hi) {  // inclusive
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(splitmix64(state_) % span);
  }
  double gaussian() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    constexpr double kTwoPi = 6.283185307179586;
    spare_ = mag * std::sin(kTwoPi * u2);
    return mag * std::cos(kTwoPi * u2);
  }

 private:
  std::uint64_t state_;
  std::optional<double> spare_;
};

struct Canvas {
  std::array<GrayImage, 3> ch;

  Canvas(std::size_t rows, std::size_t cols, Color fill)
      : ch{GrayImage(rows, cols, fill.r), GrayImage(rows, cols, fill.g),
           GrayImage(rows, cols, fill.b)} {}

  std::size_t rows() const { return ch[0].rows(); }
  std::size_t cols() const { return ch[0].cols(); }

  void set(std::size_t r, std::size_t c, Color col) {
    ch[0](r, c) = col.r;
    ch[1](r, c) = col.g;
    ch[2](r, c) = col.b;
  }
  void add(std::size_t r, std::size_t c, double v) {
    for (auto& plane : ch) plane(r, c) += v;
  }

  // Fills pixels whose centers satisfy (dx/ax)^2 + (dy/ay)^2 <= 1.
  void ellipse(double cx, double cy, double ax, double ay, Color col) {
    const auto r0 = static_cast<std::ptrdiff_t>(std::floor(cy - ay));
    const auto r1 = static_cast<std::ptrdiff_t>(std::ceil(cy + ay));
    const auto c0 = static_cast<std::ptrdiff_t>(std::floor(cx - ax));
    const auto c1 = static_cast<std::ptrdiff_t>(std::ceil(cx + ax));
    for (auto r = std::max<std::ptrdiff_t>(r0, 0);
         r <= std::min<std::ptrdiff_t>(r1, static_cast<std::ptrdiff_t>(rows()) - 1); ++r)
      for (auto c = std::max<std::ptrdiff_t>(c0, 0);
           c <= std::min<std::ptrdiff_t>(c1, static_cast<std::ptrdiff_t>(cols()) - 1); ++c) {
        const double dx = (static_cast<double>(c) - cx) / ax;
        const double dy = (static_cast<double>(r) - cy) / ay;
        if (dx * dx + dy * dy <= 1.0)
          set(static_cast<std::size_t>(r), static_cast<std::size_t>(c), col);
      }
  }
};

}  // namespace sim

inline std::size_t planted_reflection_side(const ImagingGeometry& g) {
  const double extent = reflection_pixel_extent(g);
  if (extent < 4.0)
    throw GeometryTooSmallError("reflection spans " + std::to_string(extent) +
                                " px, below the 4 px needed to resolve a pattern");
  return static_cast<std::size_t>(std::lround(extent));
}

inline SimFrame render_scene(const SceneParams& p) {
  p.validate();
  const std::size_t side = planted_reflection_side(p.geometry);
  const double ppcm = eye_plane_pixels_per_cm(p.geometry);
  const long iris_r = std::max(4L, std::lround(sim::kIrisRadiusCm * ppcm));
  const long pupil_r = std::max(2L, std::lround(0.2 * static_cast<double>(iris_r)));
  const long eye_hw = std::lround(2.2 * static_cast<double>(iris_r));
  const long eye_hh = std::lround(1.4 * static_cast<double>(iris_r));

  const double face_cx = sim::kFrameCols / 2.0;
  const double face_cy = sim::kFrameRows / 2.0 + 10.0;
  const long eye_dx = std::lround(3.2 * ppcm);
  const long eye_y = std::lround(face_cy - 1.2 * ppcm);
  const std::array<long, 2> eye_x = {std::lround(face_cx) - eye_dx, std::lround(face_cx) + eye_dx};

  for (long ex : eye_x)
    if (ex - eye_hw < 0 || ex + eye_hw >= static_cast<long>(sim::kFrameCols) || eye_y - eye_hh < 0 ||
        eye_y + eye_hh >= static_cast<long>(sim::kFrameRows))
      throw ParameterError("geometry places the eyes outside the frame");

  sim::Rng rng(p.seed);
  const int jx = p.gaze_offset_px > 0 ? rng.uniform_int(-p.gaze_offset_px, p.gaze_offset_px) : 0;
  const int jy = p.gaze_offset_px > 0 ? rng.uniform_int(-p.gaze_offset_px, p.gaze_offset_px) : 0;

  sim::Canvas canvas(sim::kFrameRows, sim::kFrameCols, sim::kBackdrop);
  canvas.ellipse(face_cx, face_cy, 6.5 * ppcm, std::min(8.5 * ppcm, face_cy - 2.0), sim::kSkin);

  const BinaryImage stamp = resample_nearest(base_template(p.pattern), side);
  const double stamp_gain = sim::kReflectionGain * global_contrast(p.pattern);

  SimFrame out;
  for (std::size_t i = 0; i < 2; ++i) {
    const long cx = eye_x[i];
    const long cy = eye_y;
    canvas.ellipse(static_cast<double>(cx), static_cast<double>(cy), static_cast<double>(eye_hw),
                   static_cast<double>(eye_hh), sim::kSclera);
    canvas.ellipse(static_cast<double>(cx), static_cast<double>(cy), static_cast<double>(iris_r),
                   static_cast<double>(iris_r), sim::kIris);
    canvas.ellipse(static_cast<double>(cx), static_cast<double>(cy), static_cast<double>(pupil_r),
                   static_cast<double>(pupil_r), sim::kPupil);

    auto in_iris = [&](long x, long y) {
      const long dx = x - cx;
      const long dy = y - cy;
      return dx * dx + dy * dy <= iris_r * iris_r;
    };

    EyeTruth truth;
    truth.label = i == 0 ? EyeLabel::left : EyeLabel::right;
    truth.iris = {static_cast<double>(cx), static_cast<double>(cy), static_cast<double>(iris_r), 0};
    if (!p.deepfake) {
      const long x0 = cx - static_cast<long>(side / 2) + jx;
      const long y0 = cy - static_cast<long>(side / 2) + jy;
      for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
          const long x = x0 + static_cast<long>(c);
          const long y = y0 + static_cast<long>(r);
          if (stamp(r, c) && in_iris(x, y))
            canvas.add(static_cast<std::size_t>(y), static_cast<std::size_t>(x), stamp_gain);
        }
      truth.reflection = Box{static_cast<int>(x0), static_cast<int>(y0), static_cast<int>(side),
                             static_cast<int>(side)};
    } else {
      // Generic 2x2 catchlight up and to the side of the pupil.
      const long off = std::lround(0.3 * static_cast<double>(iris_r));
      const long hx = cx + off + jx;
      const long hy = cy - off + jy;
      for (long y = hy; y < hy + 2; ++y)
        for (long x = hx; x < hx + 2; ++x)
          if (in_iris(x, y))
            canvas.set(static_cast<std::size_t>(y), static_cast<std::size_t>(x), {1.0, 1.0, 1.0});
    }

    const bool is_left = i == 0;
    EyeLandmark lm;
    lm.label = truth.label;
    lm.box = {static_cast<int>(cx - eye_hw), static_cast<int>(cy - eye_hh),
              static_cast<int>(2 * eye_hw + 1), static_cast<int>(2 * eye_hh + 1)};
    const Point temple{static_cast<double>(is_left ? cx - eye_hw : cx + eye_hw),
                       static_cast<double>(cy)};
    const Point nose{static_cast<double>(is_left ? cx + eye_hw : cx - eye_hw),
                     static_cast<double>(cy)};
    lm.inner = nose;
    lm.outer = temple;
    out.landmarks.eyes.push_back(lm);
    out.eyes.push_back(truth);
  }

  const double lift = sim::kAmbientStep * p.ambient_level;
  for (auto& plane : canvas.ch) {
    for (double& v : plane.pixels()) v = std::clamp(v + lift, 0.0, 1.0);
    plane = box_blur(plane, p.blur_radius_px);
  }

  out.frame = RgbImage(sim::kFrameRows, sim::kFrameCols);
  auto px = out.frame.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    std::array<std::uint8_t, 3> rgb{};
    for (std::size_t k = 0; k < 3; ++k) {
      double v = canvas.ch[k].pixels()[i];
      if (p.noise_sigma > 0) v += p.noise_sigma * rng.gaussian();
      rgb[k] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    px[i] = Rgb{rgb[0], rgb[1], rgb[2]};
  }
  return out;
}

// Axes of a sweep; an empty axis keeps the base scene's value. Cells are the
// Cartesian product in the order shape, contrast, ambient, noise, blur, gaze,
// deepfake (last axis varies fastest).
struct SweepGrid {
  SceneParams base;
  std::vector<Shape> shapes;
  std::vector<double> contrasts;
  std::vector<int> ambient_levels;
  std::vector<double> noise_sigmas;
  std::vector<double> blur_radii;
  std::vector<int> gaze_offsets;
  std::vector<bool> deepfake;

  std::size_t cell_count() const {
    auto n = [](std::size_t s) { return s == 0 ? std::size_t{1} : s; };
    return n(shapes.size()) * n(contrasts.size()) * n(ambient_levels.size()) *
           n(noise_sigmas.size()) * n(blur_radii.size()) * n(gaze_offsets.size()) *
           n(deepfake.size());
  }

  SceneParams cell(std::size_t index) const {
    SceneParams p = base;
    auto pick = [&index](const auto& axis, auto& field) {
      if (axis.empty()) return;
      field = axis[index % axis.size()];
      index /= axis.size();
    };
    bool deep = p.deepfake;
    pick(deepfake, deep);
    p.deepfake = deep;
    pick(gaze_offsets, p.gaze_offset_px);
    pick(blur_radii, p.blur_radius_px);
    pick(noise_sigmas, p.noise_sigma);
    pick(ambient_levels, p.ambient_level);
    double contrast = 0;
    pick(contrasts, contrast);
    Shape shape = p.pattern.shape();
    pick(shapes, shape);
    if (!contrasts.empty()) {
      p.pattern = pattern_with_contrast(shape, contrast, p.pattern.physical_height_cm());
    } else if (shape != p.pattern.shape()) {
      p.pattern = ProbingPattern(shape, p.pattern.foreground(), p.pattern.background(),
                                 p.pattern.physical_height_cm(), p.pattern.text_payload(),
                                 p.pattern.seed());
    }
    return p;
  }
};

struct SweepRow {
  std::size_t cell = 0;
  std::size_t frame = 0;
  SceneParams params;
  std::optional<double> best_score;
  Decision decision = Decision::inconclusive;
  std::string error;
};

// Renders frames_per_cell frames per cell and verifies each against its own
// ground-truth landmarks. Row order is grid order whatever the thread count.
inline std::vector<SweepRow> sweep(const SweepGrid& grid, std::size_t frames_per_cell,
                                   const PipelineConfig& cfg, unsigned threads = 1) {
  detail::require(frames_per_cell > 0, "frames_per_cell must be positive");
  cfg.validate();
  const std::size_t cells = grid.cell_count();
  std::vector<SweepRow> rows(cells * frames_per_cell);

  auto run = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.cell = i / frames_per_cell;
    row.frame = i % frames_per_cell;
    try {
      row.params = grid.cell(row.cell);
      row.params.seed = sim::frame_seed(grid.base.seed, row.cell, row.frame);
      const SimFrame f = render_scene(row.params);
      FixedLandmarkProvider truth(f.landmarks);
      const ProbeVerdict v = verify_frame(f.frame, row.params.pattern, cfg, truth);
      row.decision = v.decision;
      if (v.decision != Decision::inconclusive)
        row.best_score = v.best_score;
      else
        row.error = v.failure_reason.value_or("inconclusive");
    } catch (const Error& e) {
      row.decision = Decision::inconclusive;
      row.error = e.what();
    }
  };

  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < rows.size(); i += threads) run(i);
      });
    for (auto& th : pool) th.join();
  }
  return rows;
}

struct LabeledScore {
  double score = 0;
  bool real = false;
};

struct Calibration {
  double threshold = 0;
  double youden_j = 0;
  double tpr = 0;
  double fpr = 0;
};

// Threshold maximizing Youden's J = TPR - FPR for the rule "score >= t is
// real". Candidates are the midpoints between consecutive distinct scores, so
// the threshold never sits on an observed score; ties go to the larger one.
inline Calibration calibrate_threshold(std::span<const LabeledScore> scores) {
  std::vector<double> real, fake;
  for (const auto& s : scores) (s.real ? real : fake).push_back(s.score);
  if (real.empty() || fake.empty())
    throw ParameterError("calibration needs both real and deepfake scores");
  std::sort(real.begin(), real.end());
  std::sort(fake.begin(), fake.end());

  std::vector<double> observed;
  for (const auto& s : scores) observed.push_back(s.score);
  std::sort(observed.begin(), observed.end());
  observed.erase(std::unique(observed.begin(), observed.end()), observed.end());
  if (observed.size() < 2) throw DegenerateInputError("all calibration scores are identical");
  std::vector<double> candidates;
  for (std::size_t i = 0; i + 1 < observed.size(); ++i)
    candidates.push_back(observed[i] + (observed[i + 1] - observed[i]) / 2.0);

  auto at_least = [](const std::vector<double>& v, double t) {
    return static_cast<std::int64_t>(v.end() - std::lower_bound(v.begin(), v.end(), t));
  };
  const auto nr = static_cast<std::int64_t>(real.size());
  const auto nf = static_cast<std::int64_t>(fake.size());
  // J scaled by nr*nf stays integral, so ties are exact.
  std::int64_t best_j = std::numeric_limits<std::int64_t>::min();
  Calibration out;
  for (double t : candidates) {
    const auto tp = at_least(real, t);
    const auto fp = at_least(fake, t);
    const std::int64_t j = tp * nf - fp * nr;
    if (j >= best_j) {
      best_j = j;
      out = {t, static_cast<double>(j) / static_cast<double>(nr * nf),
             static_cast<double>(tp) / static_cast<double>(nr),
             static_cast<double>(fp) / static_cast<double>(nf)};
    }
  }
  return out;
}

inline std::vector<LabeledScore> labeled_scores(std::span<const SweepRow> rows) {
  std::vector<LabeledScore> out;
  for (const auto& r : rows)
    if (r.best_score) out.push_back({*r.best_score, !r.params.deepfake});
  return out;
}

}  // namespace cornea
