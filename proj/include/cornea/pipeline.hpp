#pragma once

// Frame -> eye crops -> iris circle -> binarized corneal reflection ->
// multi-scale NCC against the probing pattern -> verdict.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cornea/errors.hpp"
#include "cornea/geometry.hpp"
#include "cornea/image.hpp"
#include "cornea/imageops.hpp"
#include "cornea/landmarks.hpp"
#include "cornea/ncc.hpp"
#include "cornea/patterns.hpp"

namespace cornea {

enum class EyeCombination { max, min };
enum class MatchMode { binary, gray };
enum class Decision { authentic, suspected_deepfake, inconclusive };

inline std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::authentic: return "Authentic";
    case Decision::suspected_deepfake: return "SuspectedDeepFake";
    case Decision::inconclusive: return "Inconclusive";
  }
  return "?";
}

inline Decision decision_from_string(std::string_view s) {
  for (auto d : {Decision::authentic, Decision::suspected_deepfake, Decision::inconclusive})
    if (to_string(d) == s) return d;
  throw ParameterError("unknown decision '" + std::string(s) + "'");
}

struct PipelineConfig {
  ImagingGeometry geometry;
  double range_factor = 1.5;
  int steps = 7;
  double ncc_threshold = 0.5;
  double edge_cut = 0.3;
  // Iris radius search band as a fraction of the landmark box height.
  double iris_band_min = 0.15;
  double iris_band_max = 0.45;
  EyeCombination combination = EyeCombination::max;
  MatchMode match_mode = MatchMode::binary;

  void validate() const {
    detail::require(ncc_threshold > 0.0 && ncc_threshold < 1.0, "ncc_threshold must lie in (0,1)");
    detail::require(range_factor > 1.0, "range_factor must exceed 1");
    detail::require(steps >= 3 && steps % 2 == 1, "steps must be an odd integer >= 3");
    detail::require(edge_cut > 0.0 && edge_cut < 1.0, "edge_cut must lie in (0,1)");
    detail::require(iris_band_min > 0.0 && iris_band_min < iris_band_max,
                    "iris radius band must satisfy 0 < min < max");
  }
};

struct EyeCrop {
  EyeLabel label = EyeLabel::left;
  std::size_t x0 = 0;  // crop origin in frame coordinates
  std::size_t y0 = 0;
  GrayImage image;
  double box_height = 0;  // height of the landmark box the crop was cut from
};

struct IrisRegion {
  EyeLabel label = EyeLabel::left;
  GrayImage crop;
  Circle iris;  // crop coordinates
};

struct EyeResult {
  EyeLabel label = EyeLabel::left;
  std::optional<MatchResult> match;
  std::optional<std::string> error;

  friend bool operator==(const EyeResult&, const EyeResult&) = default;
};

struct ProbeVerdict {
  std::vector<EyeResult> eyes;
  double best_score = 0.0;
  double threshold = 0.5;
  Decision decision = Decision::inconclusive;
  std::optional<std::string> failure_reason;

  friend bool operator==(const ProbeVerdict&, const ProbeVerdict&) = default;
};

inline Decision decide(double best_score, double threshold) {
  return best_score >= threshold ? Decision::authentic : Decision::suspected_deepfake;
}

// Each crop is the landmark box grown by 10% of its size on every side,
// clipped to the frame.
inline std::vector<EyeCrop> locate_eyes(const RgbImage& frame, const LandmarkProvider& provider,
                                        std::size_t frame_index = 0) {
  detail::require(!frame.empty(), "frame is empty");
  const auto lm = provider.landmarks(frame, frame_index);
  if (!lm || lm->eyes.empty()) throw NoFaceError();
  detail::require(lm->eyes.size() <= 2, "at most two eyes per face");

  const auto rows = static_cast<double>(frame.rows());
  const auto cols = static_cast<double>(frame.cols());
  std::vector<EyeCrop> crops;
  for (const auto& eye : lm->eyes) {
    auto inside = [&](const Point& p) { return p.x >= 0 && p.y >= 0 && p.x < cols && p.y < rows; };
    detail::require(inside(eye.inner) && inside(eye.outer), "eye corner outside the frame");
    detail::require(eye.box.width > 0 && eye.box.height > 0, "eye box is empty");
    detail::require(eye.box.contains(eye.inner) && eye.box.contains(eye.outer),
                    "eye box does not contain both corners");

    const double gx = 0.1 * eye.box.width;
    const double gy = 0.1 * eye.box.height;
    const auto x0 = static_cast<std::size_t>(std::clamp(std::floor(eye.box.x - gx), 0.0, cols - 1));
    const auto y0 = static_cast<std::size_t>(std::clamp(std::floor(eye.box.y - gy), 0.0, rows - 1));
    const auto x1 = static_cast<std::size_t>(
        std::clamp(std::ceil(eye.box.x + eye.box.width + gx), 1.0, cols));
    const auto y1 = static_cast<std::size_t>(
        std::clamp(std::ceil(eye.box.y + eye.box.height + gy), 1.0, rows));
    if (x1 <= x0 || y1 <= y0) continue;

    GrayImage crop(y1 - y0, x1 - x0);
    for (std::size_t r = 0; r < crop.rows(); ++r)
      for (std::size_t c = 0; c < crop.cols(); ++c)
        crop(r, c) = luma(frame(y0 + r, x0 + c)) / 255.0;
    crops.push_back({eye.label, x0, y0, std::move(crop), static_cast<double>(eye.box.height)});
  }
  return crops;
}

inline constexpr std::size_t kHoughCandidates = 10;

inline IrisRegion segment_iris(const EyeCrop& crop, const PipelineConfig& cfg) {
  const auto& img = crop.image;
  detail::require(img.rows() >= 16 && img.cols() >= 16, "eye crop must be at least 16x16");
  const double box_h = crop.box_height > 0 ? crop.box_height : static_cast<double>(img.rows());
  const double fit = (static_cast<double>(std::min(img.rows(), img.cols())) - 1.0) / 2.0;
  const double r_min = cfg.iris_band_min * box_h;
  const double r_max = std::min(cfg.iris_band_max * box_h, fit);
  if (!(r_min > 0 && r_min < r_max))
    throw NoIrisError("iris radius band does not fit inside the eye crop");

  const auto edges = gradient_magnitude(img);
  const auto circles = hough_circles(edges, cfg.edge_cut, r_min, r_max, kHoughCandidates);
  for (const auto& c : circles) {
    const bool inside = c.cx - c.radius >= 0 && c.cy - c.radius >= 0 &&
                        c.cx + c.radius <= static_cast<double>(img.cols()) - 1 &&
                        c.cy + c.radius <= static_cast<double>(img.rows()) - 1;
    if (!inside) continue;
    const auto perimeter = ring_offsets(static_cast<int>(c.radius)).size();
    if (static_cast<double>(c.votes) < 0.25 * static_cast<double>(perimeter))
      throw NoIrisError("strongest iris candidate is below the vote floor");
    return {crop.label, img, c};
  }
  throw NoIrisError("no iris circle found");
}

// Pixels within this distance of the detected rim are excluded from the
// reflection; the Hough estimate is only good to about 1 px.
inline constexpr double kIrisRimMargin = 2.0;

namespace detail {

struct IrisDisk {
  std::size_t x0, y0, side;
  double cx, cy, inner_radius;

  bool interior(std::size_t r, std::size_t c) const {
    const double dx = static_cast<double>(x0 + c) - cx;
    const double dy = static_cast<double>(y0 + r) - cy;
    return dx * dx + dy * dy <= inner_radius * inner_radius;
  }
};

inline IrisDisk iris_disk(const IrisRegion& region) {
  const auto& c = region.iris;
  const auto r = static_cast<std::size_t>(c.radius);
  const auto x0 = static_cast<std::size_t>(c.cx) - r;
  const auto y0 = static_cast<std::size_t>(c.cy) - r;
  require(x0 + 2 * r < region.crop.cols() && y0 + 2 * r < region.crop.rows(),
          "iris circle is not inside its crop");
  return {x0, y0, 2 * r + 1, c.cx, c.cy, std::max(1.0, c.radius - kIrisRimMargin)};
}

inline std::vector<double> interior_values(const IrisRegion& region, const IrisDisk& disk) {
  std::vector<double> values;
  for (std::size_t r = 0; r < disk.side; ++r)
    for (std::size_t c = 0; c < disk.side; ++c)
      if (disk.interior(r, c)) values.push_back(region.crop(disk.y0 + r, disk.x0 + c));
  return values;
}

}  // namespace detail

// Otsu-binarized iris interior on the square bounding the iris circle. The
// histogram only sees interior pixels; everything else is 0.
inline BinaryImage extract_reflection(const IrisRegion& region) {
  const auto disk = detail::iris_disk(region);
  const auto values = detail::interior_values(region, disk);
  double t = 0;
  try {
    t = otsu_threshold(values);
  } catch (const DegenerateInputError&) {
    throw EmptyReflectionError("iris interior is uniform; no reflection present");
  }
  BinaryImage out(disk.side, disk.side);
  for (std::size_t r = 0; r < disk.side; ++r)
    for (std::size_t c = 0; c < disk.side; ++c)
      out(r, c) = disk.interior(r, c) && region.crop(disk.y0 + r, disk.x0 + c) >= t;
  return out;
}

// Intensity variant: the interior as-is, exterior filled with the interior mean.
inline GrayImage extract_reflection_gray(const IrisRegion& region) {
  const auto disk = detail::iris_disk(region);
  const auto values = detail::interior_values(region, disk);
  if (values.empty()) throw EmptyReflectionError("iris interior is empty");
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  GrayImage out(disk.side, disk.side, mean);
  for (std::size_t r = 0; r < disk.side; ++r)
    for (std::size_t c = 0; c < disk.side; ++c)
      if (disk.interior(r, c)) out(r, c) = region.crop(disk.y0 + r, disk.x0 + c);
  return out;
}

inline std::vector<BinaryImage> pattern_templates(const ProbingPattern& pattern,
                                                  const PipelineConfig& cfg) {
  return multi_scale_templates(base_template(pattern), reflection_pixel_extent(cfg.geometry),
                               cfg.range_factor, cfg.steps);
}

inline MatchResult match_eye(const EyeCrop& crop, const std::vector<BinaryImage>& templates,
                             const PipelineConfig& cfg) {
  const auto region = segment_iris(crop, cfg);
  if (cfg.match_mode == MatchMode::gray)
    return multi_scale_match(extract_reflection_gray(region), templates);
  return multi_scale_match(extract_reflection(region), templates);
}

namespace detail {

inline ProbeVerdict combine_eyes(std::vector<EyeResult> eyes, const PipelineConfig& cfg) {
  ProbeVerdict verdict;
  verdict.threshold = cfg.ncc_threshold;
  std::optional<double> best;
  std::string reasons;
  for (const auto& e : eyes) {
    if (e.match) {
      const double s = e.match->score;
      if (!best)
        best = s;
      else
        best = cfg.combination == EyeCombination::max ? std::max(*best, s) : std::min(*best, s);
    } else if (e.error) {
      if (!reasons.empty()) reasons += "; ";
      reasons += std::string(to_string(e.label)) + ": " + *e.error;
    }
  }
  verdict.eyes = std::move(eyes);
  if (!best) {
    verdict.decision = Decision::inconclusive;
    verdict.failure_reason =
        "no eye could be analyzed" + (reasons.empty() ? std::string() : " (" + reasons + ")");
    return verdict;
  }
  verdict.best_score = *best;
  verdict.decision = decide(*best, cfg.ncc_threshold);
  return verdict;
}

}  // namespace detail

inline ProbeVerdict verify_frame(const RgbImage& frame, const ProbingPattern& pattern,
                                 const PipelineConfig& cfg, const LandmarkProvider& provider,
                                 std::size_t frame_index = 0) {
  cfg.validate();
  const auto templates = pattern_templates(pattern, cfg);
  std::vector<EyeCrop> crops;
  try {
    crops = locate_eyes(frame, provider, frame_index);
  } catch (const NoFaceError& e) {
    ProbeVerdict v;
    v.threshold = cfg.ncc_threshold;
    v.decision = Decision::inconclusive;
    v.failure_reason = e.what();
    return v;
  }
  std::vector<EyeResult> eyes;
  for (const auto& crop : crops) {
    EyeResult r{crop.label, std::nullopt, std::nullopt};
    try {
      r.match = match_eye(crop, templates, cfg);
    } catch (const Error& e) {
      r.error = e.what();
    }
    eyes.push_back(std::move(r));
  }
  return detail::combine_eyes(std::move(eyes), cfg);
}

// Median over the frames that reached a decision; the decision is re-applied
// to the median. The reported eyes are those of the median frame (the lower
// middle one for an even count).
inline ProbeVerdict aggregate_verdicts(std::span<const ProbeVerdict> frames, double threshold) {
  detail::require(!frames.empty(), "cannot aggregate an empty frame list");
  if (frames.size() == 1) return frames.front();
  std::vector<std::size_t> decided;
  for (std::size_t i = 0; i < frames.size(); ++i)
    if (frames[i].decision != Decision::inconclusive) decided.push_back(i);
  if (decided.empty()) {
    ProbeVerdict v;
    v.threshold = threshold;
    v.decision = Decision::inconclusive;
    v.failure_reason = "all " + std::to_string(frames.size()) + " frames were inconclusive";
    if (frames.front().failure_reason) *v.failure_reason += ": " + *frames.front().failure_reason;
    return v;
  }
  std::stable_sort(decided.begin(), decided.end(), [&](std::size_t a, std::size_t b) {
    return frames[a].best_score < frames[b].best_score;
  });
  const std::size_t n = decided.size();
  const double median = n % 2 == 1 ? frames[decided[n / 2]].best_score
                                   : (frames[decided[n / 2 - 1]].best_score +
                                      frames[decided[n / 2]].best_score) /
                                         2.0;
  ProbeVerdict v;
  v.eyes = frames[decided[(n - 1) / 2]].eyes;
  v.best_score = median;
  v.threshold = threshold;
  v.decision = decide(median, threshold);
  return v;
}

inline ProbeVerdict verify_sequence(std::span<const RgbImage> frames, const ProbingPattern& pattern,
                                    const PipelineConfig& cfg, const LandmarkProvider& provider) {
  detail::require(!frames.empty(), "frame sequence is empty");
  std::vector<ProbeVerdict> per_frame;
  per_frame.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i)
    per_frame.push_back(verify_frame(frames[i], pattern, cfg, provider, i));
  return aggregate_verdicts(per_frame, cfg.ncc_threshold);
}

}  // namespace cornea
