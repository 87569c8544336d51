#include <gtest/gtest.h>

#include <random>

#include "cornea/imageops.hpp"
#include "oracles.hpp"

using namespace cornea;

TEST(ToGray, LumaWeights) {
  const auto white = to_gray(RgbImage(3, 5, Rgb{255, 255, 255}));
  EXPECT_EQ(white.rows(), 3u);
  EXPECT_EQ(white.cols(), 5u);
  for (double v : white.pixels()) EXPECT_NEAR(v, 1.0, 1e-12);
  const auto red = to_gray(RgbImage(2, 2, Rgb{255, 0, 0}));
  const auto green = to_gray(RgbImage(2, 2, Rgb{0, 255, 0}));
  const auto blue = to_gray(RgbImage(2, 2, Rgb{0, 0, 255}));
  for (double v : red.pixels()) EXPECT_NEAR(v, 0.299, 1e-12);
  for (double v : green.pixels()) EXPECT_NEAR(v, 0.587, 1e-12);
  for (double v : blue.pixels()) EXPECT_NEAR(v, 0.114, 1e-12);
  EXPECT_THROW(to_gray(RgbImage()), ParameterError);
}

TEST(Gradient, ConstantImageIsFlat) {
  const auto g = gradient_magnitude(GrayImage(8, 9, 0.4));
  for (double v : g.pixels()) EXPECT_EQ(v, 0.0);
}

TEST(Gradient, StepEdgePeaksBesideTheStep) {
  const std::size_t c = 6;
  GrayImage img(10, 12, 0.1);
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t x = c; x < 12; ++x) img(r, x) = 0.9;
  const auto g = gradient_magnitude(img);
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t x = 0; x < 12; ++x) {
      const bool at_step = x == c - 1 || x == c;
      // Hand-evaluated Sobel: |gx| = 4 * 0.8 on both columns, 0 elsewhere.
      EXPECT_DOUBLE_EQ(g(r, x), at_step ? 1.0 : 0.0) << r << "," << x;
    }
}

TEST(Gradient, NormalizedToUnitRange) {
  std::mt19937_64 rng(1);
  const auto g = gradient_magnitude(oracle::random_gray(rng, 20, 17));
  double peak = 0;
  for (double v : g.pixels()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    peak = std::max(peak, v);
  }
  EXPECT_DOUBLE_EQ(peak, 1.0);
  EXPECT_THROW(gradient_magnitude(GrayImage(2, 5)), ParameterError);
  EXPECT_THROW(gradient_magnitude(GrayImage(5, 2)), ParameterError);
}

TEST(Otsu, BimodalSplitsBetweenLevels) {
  std::vector<double> v(100, 0.2);
  v.insert(v.end(), 100, 0.8);
  const double t = otsu_threshold(v);
  EXPECT_GT(t, 0.2);
  EXPECT_LT(t, 0.8);
  // Smallest maximizing split: just above the lower level's bin.
  EXPECT_DOUBLE_EQ(t, bin_threshold(histogram_bin(0.2) + 1));
}

TEST(Otsu, ConstantImageIsDegenerate) {
  EXPECT_THROW(otsu_threshold(GrayImage(4, 4, 0.3)), DegenerateInputError);
  EXPECT_THROW(otsu_threshold(std::vector<double>{}), DegenerateInputError);
  // Distinct reals inside one bin are still one level.
  EXPECT_THROW(otsu_threshold(std::vector<double>{0.5, 0.5001}), DegenerateInputError);
}

TEST(Otsu, MatchesExhaustiveScanOnRandomImages) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    const std::size_t rows = 1 + rng() % 48, cols = 2 + rng() % 48;
    GrayImage img = oracle::random_gray(rng, rows, cols);
    if (i % 3 == 1)  // few levels: long runs of empty bins
      for (double& p : img.pixels()) p = std::round(p * 4) / 4;
    if (i % 3 == 2)  // skewed mixture
      for (double& p : img.pixels()) p = p < 0.8 ? 0.1 + 0.1 * p : p;
    std::vector<double> values(img.pixels().begin(), img.pixels().end());
    const int k = oracle::otsu_split(values);
    if (k < 0) {
      EXPECT_THROW(otsu_threshold(img), DegenerateInputError);
      continue;
    }
    EXPECT_DOUBLE_EQ(otsu_threshold(img), (k - 0.5) / 255.0) << "case " << i;
  }
}

TEST(Otsu, TwoLevelImagesRecoverMembership) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> level(0, 255);
  for (int i = 0; i < 200; ++i) {
    int a = level(rng), b = level(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    const auto labels = oracle::random_binary(rng, 12, 12, 0.1 + 0.8 * (i % 7) / 6.0);
    if (count_ones(labels) == 0 || count_ones(labels) == labels.size()) continue;
    GrayImage img(12, 12);
    for (std::size_t p = 0; p < img.size(); ++p)
      img.pixels()[p] = (labels.pixels()[p] ? b : a) / 255.0;
    const double t = otsu_threshold(img);
    EXPECT_GT(t, a / 255.0);
    EXPECT_LT(t, b / 255.0);
    EXPECT_EQ(binarize(img, t), labels);
  }
}

TEST(Binarize, ExactAndMonotone) {
  GrayImage img(1, 4);
  img(0, 0) = 0.2;
  img(0, 1) = 0.8;
  img(0, 2) = 0.5;
  img(0, 3) = 0.49;
  const auto m = binarize(img, 0.5);
  EXPECT_EQ(m(0, 0), 0);
  EXPECT_EQ(m(0, 1), 1);
  EXPECT_EQ(m(0, 2), 1);
  EXPECT_EQ(m(0, 3), 0);
  EXPECT_THROW(binarize(img, 0.0), ParameterError);
  EXPECT_THROW(binarize(img, 1.0), ParameterError);

  std::mt19937_64 rng(4);
  const auto r = oracle::random_gray(rng, 16, 16);
  BinaryImage prev = binarize(r, 0.01);
  for (double t = 0.02; t < 1.0; t += 0.01) {
    const auto cur = binarize(r, t);
    for (std::size_t i = 0; i < cur.size(); ++i) EXPECT_LE(cur.pixels()[i], prev.pixels()[i]);
    prev = cur;
  }
}

TEST(Hough, RingOffsetsRoundToRadius) {
  for (int r = 1; r < 30; ++r) {
    const auto ring = ring_offsets(r);
    EXPECT_FALSE(ring.empty());
    for (auto o : ring) EXPECT_EQ(std::lround(std::hypot(o.dx, o.dy)), r);
    // Count oracle: every lattice point in the annulus.
    std::size_t n = 0;
    for (int dy = -r - 1; dy <= r + 1; ++dy)
      for (int dx = -r - 1; dx <= r + 1; ++dx) {
        const double d = std::hypot(dx, dy);
        n += d >= r - 0.5 && d < r + 0.5;
      }
    EXPECT_EQ(ring.size(), n) << r;
  }
}

TEST(Hough, RecoversRenderedRing) {
  const auto edges = oracle::ring_image(64, 64, 32, 32, 12);
  const auto c = hough_circles(edges, 0.5, 5, 30, 1);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_LE(std::abs(c[0].cx - 32), 1.0);
  EXPECT_LE(std::abs(c[0].cy - 32), 1.0);
  EXPECT_LE(std::abs(c[0].radius - 12), 1.0);
}

TEST(Hough, BlankEdgeMapFindsNothing) {
  EXPECT_TRUE(hough_circles(GrayImage(32, 32, 0.0), 0.3, 3, 10, 5).empty());
}

TEST(Hough, TwoDisjointRingsAreBothFound) {
  auto edges = oracle::ring_image(60, 100, 25, 30, 10);
  const auto second = oracle::ring_image(60, 100, 72, 28, 14);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges.pixels()[i] = std::max(edges.pixels()[i], second.pixels()[i]);
  const auto c = hough_circles(edges, 0.5, 6, 20, 2);
  ASSERT_EQ(c.size(), 2u);
  auto near = [](const Circle& k, double x, double y, double r) {
    return std::abs(k.cx - x) <= 1 && std::abs(k.cy - y) <= 1 && std::abs(k.radius - r) <= 1;
  };
  EXPECT_TRUE((near(c[0], 25, 30, 10) && near(c[1], 72, 28, 14)) ||
              (near(c[1], 25, 30, 10) && near(c[0], 72, 28, 14)));
}

TEST(Hough, RecoversRandomRingsAndDisks) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> rad(6, 20), jitter(-0.5, 0.5);
  for (int i = 0; i < 40; ++i) {
    const double r = std::round(rad(rng));
    const double cx = 28 + jitter(rng) + static_cast<double>(rng() % 8);
    const double cy = 28 + jitter(rng) + static_cast<double>(rng() % 8);
    const auto ring = hough_circles(oracle::ring_image(64, 64, cx, cy, r), 0.5, 4, 30, 1);
    ASSERT_EQ(ring.size(), 1u);
    EXPECT_LE(std::abs(ring[0].cx - cx), 1.0);
    EXPECT_LE(std::abs(ring[0].cy - cy), 1.0);
    EXPECT_LE(std::abs(ring[0].radius - r), 1.0);

    const auto edges = gradient_magnitude(oracle::disk_image(64, 64, cx, cy, r));
    const auto disk = hough_circles(edges, 0.3, 4, 30, 1);
    ASSERT_EQ(disk.size(), 1u);
    EXPECT_LE(std::abs(disk[0].cx - cx), 1.0);
    EXPECT_LE(std::abs(disk[0].cy - cy), 1.0);
    EXPECT_LE(std::abs(disk[0].radius - r), 1.0);
  }
}

TEST(Hough, SuppressionKeepsDistantCenters) {
  const auto edges = oracle::ring_image(64, 64, 32, 32, 12);
  const auto c = hough_circles(edges, 0.5, 5, 30, 10);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i > 0) {
      EXPECT_GE(c[i - 1].votes, c[i].votes);
    }
    for (std::size_t j = 0; j < i; ++j)
      EXPECT_GE(std::hypot(c[i].cx - c[j].cx, c[i].cy - c[j].cy), c[j].radius / 2);
  }
}

TEST(Hough, Preconditions) {
  const GrayImage e(20, 30, 0.0);
  EXPECT_THROW(hough_circles(e, 0.3, 0, 5, 1), ParameterError);
  EXPECT_THROW(hough_circles(e, 0.3, 6, 5, 1), ParameterError);
  EXPECT_THROW(hough_circles(e, 0.3, 2, 20, 1), ParameterError);
  EXPECT_THROW(hough_circles(e, 0.0, 2, 5, 1), ParameterError);
  EXPECT_THROW(hough_circles(e, 1.0, 2, 5, 1), ParameterError);
}

TEST(BoxBlur, PreservesConstantsAndMass) {
  const auto flat = box_blur(GrayImage(9, 7, 0.6), 1.7);
  for (double v : flat.pixels()) EXPECT_NEAR(v, 0.6, 1e-12);
  GrayImage spike(21, 21, 0.0);
  spike(10, 10) = 1.0;
  const auto b = box_blur(spike, 1.5);
  double sum = 0;
  for (double v : b.pixels()) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  // Integer radius: plain (2r+1)^2 box.
  const auto b1 = box_blur(spike, 1.0);
  EXPECT_NEAR(b1(10, 10), 1.0 / 9, 1e-12);
  EXPECT_NEAR(b1(9, 11), 1.0 / 9, 1e-12);
  EXPECT_EQ(b1(8, 10), 0.0);
  EXPECT_EQ(box_blur(spike, 0.0), spike);
  EXPECT_THROW(box_blur(spike, -1), ParameterError);
}
