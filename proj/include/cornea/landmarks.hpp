#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cornea/errors.hpp"
#include "cornea/image.hpp"

namespace cornea {

enum class EyeLabel { left, right };

inline std::string_view to_string(EyeLabel l) { return l == EyeLabel::left ? "left" : "right"; }

inline EyeLabel eye_label_from_string(std::string_view s) {
  if (s == "left") return EyeLabel::left;
  if (s == "right") return EyeLabel::right;
  throw ParameterError("unknown eye label '" + std::string(s) + "'");
}

struct Point {
  double x = 0;
  double y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Box {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool contains(const Point& p) const {
    return p.x >= x && p.y >= y && p.x <= x + width - 1 && p.y <= y + height - 1;
  }
  friend bool operator==(const Box&, const Box&) = default;
};

struct EyeLandmark {
  EyeLabel label = EyeLabel::left;
  Point inner;
  Point outer;
  Box box;
  friend bool operator==(const EyeLandmark&, const EyeLandmark&) = default;
};

// Per-eye landmarks of one face; zero to two eyes.
struct EyeLandmarks {
  std::vector<EyeLandmark> eyes;
  friend bool operator==(const EyeLandmarks&, const EyeLandmarks&) = default;
};

// Source of eye landmarks for a frame. Returning nullopt means no face.
class LandmarkProvider {
 public:
  virtual ~LandmarkProvider() = default;
  virtual std::optional<EyeLandmarks> landmarks(const RgbImage& frame,
                                                std::size_t frame_index) const = 0;
};

// Replays precomputed landmarks: one entry per frame, or a single entry
// shared by every frame.
class FixedLandmarkProvider final : public LandmarkProvider {
 public:
  FixedLandmarkProvider() = default;
  explicit FixedLandmarkProvider(std::optional<EyeLandmarks> shared) : per_frame_{std::move(shared)} {}
  explicit FixedLandmarkProvider(std::vector<std::optional<EyeLandmarks>> per_frame)
      : per_frame_(std::move(per_frame)) {}

  std::optional<EyeLandmarks> landmarks(const RgbImage&, std::size_t frame_index) const override {
    if (per_frame_.empty()) return std::nullopt;
    if (per_frame_.size() == 1) return per_frame_.front();
    if (frame_index >= per_frame_.size()) return std::nullopt;
    return per_frame_[frame_index];
  }

 private:
  std::vector<std::optional<EyeLandmarks>> per_frame_;
};

}  // namespace cornea
