#pragma once

// Normalized cross-correlation template matching.
//
//   NCC(u,v) = sum (I - mean_I(u,v)) (t - mean_t)
//              / sqrt(sum (I - mean_I(u,v))^2 * sum (t - mean_t)^2)
//
// u is the column offset and v the row offset of the template's top-left
// corner. A window or template with zero variance scores 0.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "cornea/errors.hpp"
#include "cornea/image.hpp"

namespace cornea {

struct MatchResult {
  std::size_t u = 0;
  std::size_t v = 0;
  std::size_t scale_index = 0;
  double score = 0.0;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

// Per-pixel variance below this is treated as zero.
inline constexpr double kNccVarianceFloor = 1e-12;

namespace detail {

template <typename TI, typename TT>
void require_fits(const Image<TI>& img, const Image<TT>& tpl) {
  require(!tpl.empty(), "template is empty");
  require(tpl.rows() <= img.rows() && tpl.cols() <= img.cols(),
          "template is larger than the image");
}

// Summed-area table with a zero first row and column.
template <typename T, typename F>
std::vector<double> integral(const Image<T>& img, F f) {
  const std::size_t w = img.cols() + 1;
  std::vector<double> s((img.rows() + 1) * w, 0.0);
  for (std::size_t r = 0; r < img.rows(); ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < img.cols(); ++c) {
      row += f(static_cast<double>(img(r, c)));
      s[(r + 1) * w + c + 1] = s[r * w + c + 1] + row;
    }
  }
  return s;
}

inline double box_sum(const std::vector<double>& s, std::size_t w, std::size_t r0,
                      std::size_t c0, std::size_t rows, std::size_t cols) {
  return s[(r0 + rows) * w + c0 + cols] - s[r0 * w + c0 + cols] - s[(r0 + rows) * w + c0] +
         s[r0 * w + c0];
}

}  // namespace detail

// Single-offset evaluation, straight from the definition.
template <typename TI, typename TT>
double ncc_score(const Image<TI>& img, const Image<TT>& tpl, std::size_t u, std::size_t v) {
  detail::require_fits(img, tpl);
  detail::require(u + tpl.cols() <= img.cols() && v + tpl.rows() <= img.rows(),
                  "template does not fit at the requested offset");
  const auto n = static_cast<double>(tpl.size());
  double mi = 0, mt = 0;
  for (std::size_t y = 0; y < tpl.rows(); ++y)
    for (std::size_t x = 0; x < tpl.cols(); ++x) {
      mi += static_cast<double>(img(v + y, u + x));
      mt += static_cast<double>(tpl(y, x));
    }
  mi /= n;
  mt /= n;
  double num = 0, vi = 0, vt = 0;
  for (std::size_t y = 0; y < tpl.rows(); ++y)
    for (std::size_t x = 0; x < tpl.cols(); ++x) {
      const double a = static_cast<double>(img(v + y, u + x)) - mi;
      const double b = static_cast<double>(tpl(y, x)) - mt;
      num += a * b;
      vi += a * a;
      vt += b * b;
    }
  if (vi <= kNccVarianceFloor * n || vt <= kNccVarianceFloor * n) return 0.0;
  return num / std::sqrt(vi * vt);
}

// Exhaustive search for the best offset. Window statistics come from
// summed-area tables; the cross term is accumulated against the zero-mean
// template. Ties keep the smallest v, then the smallest u.
template <typename TI, typename TT>
MatchResult ncc_match(const Image<TI>& img, const Image<TT>& tpl) {
  detail::require_fits(img, tpl);
  const std::size_t th = tpl.rows();
  const std::size_t tw = tpl.cols();
  const auto n = static_cast<double>(tpl.size());

  double mt = 0;
  for (auto t : tpl.pixels()) mt += static_cast<double>(t);
  mt /= n;
  std::vector<double> tz(tpl.size());
  double vt = 0;
  for (std::size_t i = 0; i < tz.size(); ++i) {
    tz[i] = static_cast<double>(tpl.pixels()[i]) - mt;
    vt += tz[i] * tz[i];
  }

  MatchResult best{0, 0, 0, -std::numeric_limits<double>::infinity()};
  if (vt <= kNccVarianceFloor * n) return {0, 0, 0, 0.0};

  const auto s1 = detail::integral(img, [](double x) { return x; });
  const auto s2 = detail::integral(img, [](double x) { return x * x; });
  const std::size_t w = img.cols() + 1;

  for (std::size_t v = 0; v + th <= img.rows(); ++v) {
    for (std::size_t u = 0; u + tw <= img.cols(); ++u) {
      const double sum = detail::box_sum(s1, w, v, u, th, tw);
      const double sq = detail::box_sum(s2, w, v, u, th, tw);
      const double vi = sq - sum * sum / n;
      double score = 0.0;
      if (vi > kNccVarianceFloor * n) {
        double num = 0;
        const double* tp = tz.data();
        for (std::size_t y = 0; y < th; ++y) {
          const TI* row = &img(v + y, u);
          for (std::size_t x = 0; x < tw; ++x) num += static_cast<double>(row[x]) * tp[x];
          tp += tw;
        }
        score = num / std::sqrt(vi * vt);
      }
      if (score > best.score) best = {u, v, 0, score};
    }
  }
  return best;
}

// Best match over an ordered template list. Templates that do not fit are
// skipped; ties keep the smaller scale index.
template <typename TI, typename TT>
MatchResult multi_scale_match(const Image<TI>& img, const std::vector<Image<TT>>& templates) {
  MatchResult best{};
  bool any = false;
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const auto& t = templates[i];
    if (t.empty() || t.rows() > img.rows() || t.cols() > img.cols()) continue;
    auto m = ncc_match(img, t);
    m.scale_index = i;
    if (!any || m.score > best.score) best = m;
    any = true;
  }
  if (!any) throw ParameterError("no template fits inside the image");
  return best;
}

}  // namespace cornea
