#pragma once

// Thin-lens / spherical-mirror model of how large the corneal reflection of an
// on-screen pattern appears on the webcam sensor. All lengths in centimeters.

#include <cmath>
#include <string>

#include "cornea/errors.hpp"

namespace cornea {

class ImagingGeometry {
 public:
  // Laptop setting: 14.5 cm pattern, eye 30 cm away, 1.25 cm eyeball radius,
  // 0.5 cm focal length, 0.45 cm sensor with 720 rows.
  ImagingGeometry() = default;

  ImagingGeometry(double pattern_height_cm, double eye_distance_cm, double eye_radius_cm,
                  double focal_length_cm, double sensor_height_cm, int sensor_rows)
      : pattern_height_cm_(pattern_height_cm),
        eye_distance_cm_(eye_distance_cm),
        eye_radius_cm_(eye_radius_cm),
        focal_length_cm_(focal_length_cm),
        sensor_height_cm_(sensor_height_cm),
        sensor_rows_(sensor_rows) {
    validate();
  }

  double pattern_height_cm() const noexcept { return pattern_height_cm_; }
  double eye_distance_cm() const noexcept { return eye_distance_cm_; }
  double eye_radius_cm() const noexcept { return eye_radius_cm_; }
  double focal_length_cm() const noexcept { return focal_length_cm_; }
  double sensor_height_cm() const noexcept { return sensor_height_cm_; }
  int sensor_rows() const noexcept { return sensor_rows_; }

  ImagingGeometry with_pattern_height(double h) const {
    auto g = *this;
    g.pattern_height_cm_ = h;
    g.validate();
    return g;
  }
  ImagingGeometry with_eye_distance(double d) const {
    auto g = *this;
    g.eye_distance_cm_ = d;
    g.validate();
    return g;
  }

  friend bool operator==(const ImagingGeometry&, const ImagingGeometry&) = default;

 private:
  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw ParameterError(std::string(name) + " must be a positive finite number");
    };
    positive(pattern_height_cm_, "pattern_height_cm");
    positive(eye_distance_cm_, "eye_distance_cm");
    positive(eye_radius_cm_, "eye_radius_cm");
    positive(focal_length_cm_, "focal_length_cm");
    positive(sensor_height_cm_, "sensor_height_cm");
    if (sensor_rows_ <= 0) throw ParameterError("sensor_rows must be positive");
    if (!(eye_distance_cm_ > focal_length_cm_))
      throw ParameterError("eye_distance_cm must exceed focal_length_cm");
  }

  double pattern_height_cm_ = 14.5;
  double eye_distance_cm_ = 30.0;
  double eye_radius_cm_ = 1.25;
  double focal_length_cm_ = 0.5;
  double sensor_height_cm_ = 0.45;
  int sensor_rows_ = 720;
};

// Height of the pattern's virtual image on the cornea: z = h r / d.
inline double reflection_height(const ImagingGeometry& g) {
  return g.pattern_height_cm() * g.eye_radius_cm() / g.eye_distance_cm();
}

// Lens-to-sensor distance from 1/d + 1/q = 1/f.
inline double lens_to_sensor_distance(const ImagingGeometry& g) {
  const double d = g.eye_distance_cm();
  const double f = g.focal_length_cm();
  return d * f / (d - f);
}

// Extent of the reflection on the sensor: p = h r f / (d (d - f)).
inline double reflection_sensor_extent(const ImagingGeometry& g) {
  const double d = g.eye_distance_cm();
  const double f = g.focal_length_cm();
  return g.pattern_height_cm() * g.eye_radius_cm() * f / (d * (d - f));
}

// Pixels spanned by the reflection along one axis: p M / w.
inline double reflection_pixel_extent(const ImagingGeometry& g) {
  return reflection_sensor_extent(g) * g.sensor_rows() / g.sensor_height_cm();
}

// Pixel area, assuming the same extent on both axes.
inline double reflection_pixel_area(const ImagingGeometry& g) {
  const double e = reflection_pixel_extent(g);
  return e * e;
}

// Pixels per centimeter for an object in the eye plane.
inline double eye_plane_pixels_per_cm(const ImagingGeometry& g) {
  const double d = g.eye_distance_cm();
  const double f = g.focal_length_cm();
  return f / (d - f) * g.sensor_rows() / g.sensor_height_cm();
}

}  // namespace cornea
