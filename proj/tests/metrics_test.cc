#include "fishline/metrics.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fishline/error.h"
#include "fishline/synth.h"
#include "test_util.h"

namespace fishline {
namespace {

using testing::SmallEquidistant;
using testing::SmallPinhole;

// 10 log10(255^2 / 256) and (2*100*110 + C1) / (100^2 + 110^2 + C1), 40 digits.
constexpr double kPsnr16 = 24.048403955560607795;
constexpr double kSsim100vs110 = 0.99547644409150656012;
constexpr double kRadialError = 0.13445191883588911674;
constexpr double kRadius40 = 39.76545968900220638;

ImageBuffer Constant(int w, int h, double v, int channels = 1) {
  return ImageBuffer(w, h, channels, v);
}

// Naive windowed SSIM over every window fully inside the mask, written
// without summed-area tables.
double ReferenceSsim(const ImageBuffer& a, const ImageBuffer& b,
                     const ValidityMask& mask) {
  constexpr int r = 5;
  double weights[11][11];
  double total = 0.0;
  for (int j = -r; j <= r; ++j) {
    for (int i = -r; i <= r; ++i) {
      weights[j + r][i + r] = std::exp(-(i * i + j * j) / (2 * 1.5 * 1.5));
      total += weights[j + r][i + r];
    }
  }
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double c2 = (0.03 * 255) * (0.03 * 255);
  double sum = 0.0;
  int count = 0;
  for (int y = r; y < a.height() - r; ++y) {
    for (int x = r; x < a.width() - r; ++x) {
      bool inside = true;
      for (int j = -r; j <= r && inside; ++j) {
        for (int i = -r; i <= r && inside; ++i) inside = mask(x + i, y + j);
      }
      if (!inside) continue;
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int j = -r; j <= r; ++j) {
        for (int i = -r; i <= r; ++i) {
          const double w = weights[j + r][i + r] / total;
          const double va = 255.0 * a.Luma(x + i, y + j);
          const double vb = 255.0 * b.Luma(x + i, y + j);
          ma += w * va;
          mb += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * va * vb;
        }
      }
      const double va = saa - ma * ma;
      const double vb = sbb - mb * mb;
      const double cov = sab - ma * mb;
      sum += ((2 * ma * mb + c1) * (2 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return sum / count;
}

TEST(Psnr, IdenticalImagesHitCap) {
  const ImageBuffer card = testing::TestCard(20, 20);
  EXPECT_EQ(psnr(card, card, ValidityMask(20, 20, true)), kPsnrCap);
}

TEST(Psnr, UniformDifference) {
  const ImageBuffer a = Constant(10, 10, 0.5);
  const ImageBuffer b = Constant(10, 10, 0.5 + 16.0 / 255.0);
  EXPECT_NEAR(psnr(a, b, ValidityMask(10, 10, true)), kPsnr16, 1e-9);
  EXPECT_NEAR(psnr(a, b, ValidityMask(10, 10, true)), 24.049, 1e-3);
}

TEST(Psnr, HalvingDifferenceAddsSixDecibels) {
  const ImageBuffer a = Constant(8, 8, 0.25, 3);
  const ImageBuffer b = Constant(8, 8, 0.25 + 20.0 / 255.0, 3);
  const ImageBuffer c = Constant(8, 8, 0.25 + 10.0 / 255.0, 3);
  const ValidityMask mask(8, 8, true);
  EXPECT_NEAR(psnr(a, c, mask) - psnr(a, b, mask), 20.0 * std::log10(2.0),
              1e-9);
}

TEST(Psnr, DecreasesWithNoiseAmplitude) {
  const ImageBuffer a = Constant(16, 16, 0.5);
  const ValidityMask mask(16, 16, true);
  double previous = INFINITY;
  for (int amp = 1; amp <= 20; ++amp) {
    const ImageBuffer b = Constant(16, 16, 0.5 + amp / 255.0);
    const double value = psnr(a, b, mask);
    EXPECT_LT(value, previous);
    previous = value;
  }
}

TEST(Psnr, IgnoresMaskedPixels) {
  ImageBuffer a = Constant(4, 4, 0.5);
  ImageBuffer b = a;
  b.at(0, 0) = 1.0;
  ValidityMask mask(4, 4, true);
  mask.set(0, 0, false);
  EXPECT_EQ(psnr(a, b, mask), kPsnrCap);
}

TEST(Psnr, Errors) {
  const ImageBuffer a = Constant(4, 4, 0.5);
  try {
    psnr(a, a, ValidityMask(4, 4, false));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyMask);
  }
  try {
    psnr(a, Constant(4, 5, 0.5), ValidityMask(4, 4, true));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(Ssim, IdenticalImagesScoreOne) {
  const ImageBuffer card = testing::TestCard(32, 32);
  EXPECT_NEAR(ssim(card, card, ValidityMask(32, 32, true)), 1.0, 1e-12);
}

TEST(Ssim, ConstantImages) {
  const ImageBuffer a = Constant(20, 20, 100.0 / 255.0);
  const ImageBuffer b = Constant(20, 20, 110.0 / 255.0);
  const double value = ssim(a, b, ValidityMask(20, 20, true));
  EXPECT_NEAR(value, kSsim100vs110, 1e-9);
  EXPECT_NEAR(value, 0.99548, 1e-4);
}

TEST(Ssim, ContrastInversionIsNegative) {
  ImageBuffer a(11, 11, 1);
  ImageBuffer b(11, 11, 1);
  for (int y = 0; y < 11; ++y) {
    for (int x = 0; x < 11; ++x) {
      const double pattern = ((x + y) % 2 == 0 ? 0.3 : -0.3);
      a.at(x, y) = 0.5 + pattern;
      b.at(x, y) = 0.5 - pattern;
    }
  }
  const ValidityMask mask(11, 11, true);
  const double value = ssim(a, b, mask);
  EXPECT_LT(value, 0.0);
  EXPECT_NEAR(value, ReferenceSsim(a, b, mask), 1e-9);
}

TEST(Ssim, MatchesNaiveWindowsUnderMask) {
  const ImageBuffer a = testing::TestCard(40, 36);
  ImageBuffer b = testing::SmoothCard(40, 36);
  ValidityMask mask(40, 36, true);
  for (int y = 0; y < 36; ++y) {
    for (int x = 0; x < 40; ++x) {
      if ((x - 8) * (x - 8) + (y - 30) * (y - 30) < 60) mask.set(x, y, false);
    }
  }
  EXPECT_NEAR(ssim(a, b, mask), ReferenceSsim(a, b, mask), 1e-9);
}

TEST(Ssim, Symmetric) {
  const ImageBuffer a = testing::TestCard(30, 30);
  const ImageBuffer b = testing::SmoothCard(30, 30);
  const ValidityMask mask(30, 30, true);
  EXPECT_LE(std::abs(ssim(a, b, mask) - ssim(b, a, mask)), 1e-12);
}

TEST(Ssim, NoFullWindowIsEmptyMask) {
  const ImageBuffer a = Constant(10, 30, 0.5);
  EXPECT_THROW(ssim(a, a, ValidityMask(10, 30, true)), Error);
}

TEST(Rpe, ZeroAtEquality) {
  SamplerConfig config;
  Rng rng(3);
  const DistortionParams k = sample_params(rng, config);
  const RpeResult r = rpe(k, k, config.Pinhole(), 320, 320);
  EXPECT_EQ(r.mean, 0.0);
  EXPECT_GT(r.valid, 0u);
}

TEST(Rpe, PerPixelRadialError) {
  const PinholeSpec pin = SmallPinhole();
  const FisheyeModel hat(SmallEquidistant(300.0), pin, 1.2);
  const FisheyeModel gt(SmallEquidistant(301.0), pin, 1.2);
  const auto e = reprojection_error({160.0 + kRadius40, 160.0}, hat, gt);
  ASSERT_TRUE(e.has_value());
  EXPECT_NEAR(*e, kRadialError, 1e-9);
}

TEST(Rpe, SymmetricAndTriangle) {
  SamplerConfig config;
  const PinholeSpec pin = config.Pinhole();
  Rng rng(4);
  int checked = 0;
  while (checked < 3) {
    const DistortionParams a = sample_params(rng, config);
    DistortionParams b = a;
    b.k[1] += 2.0;
    b.u0 += 0.7;
    DistortionParams c = a;
    c.k[2] -= 1.0;
    c.v0 -= 0.4;
    if (!validate_params(b, 1.2).monotone || !validate_params(c, 1.2).monotone) {
      continue;
    }
    ++checked;
    const RpeResult ab = rpe(a, b, pin, 320, 320);
    const RpeResult ba = rpe(b, a, pin, 320, 320);
    EXPECT_GT(ab.mean, 0.0);
    EXPECT_NEAR(ab.mean, ba.mean, 1e-12);
    EXPECT_EQ(ab.valid, ba.valid);

    const FisheyeModel ma(a, pin, 1.2);
    const FisheyeModel mb(b, pin, 1.2);
    const FisheyeModel mc(c, pin, 1.2);
    for (int y = 0; y < 320; y += 9) {
      for (int x = 0; x < 320; x += 9) {
        const Vec2 p(x, y);
        const auto e_ab = reprojection_error(p, ma, mb);
        const auto e_ac = reprojection_error(p, ma, mc);
        const auto e_cb = reprojection_error(p, mc, mb);
        if (!e_ab || !e_ac || !e_cb) continue;
        EXPECT_LE(*e_ab, *e_ac + *e_cb + 1e-12);
      }
    }
  }
}

LineHeatmap SegmentHeatmap(int w, int h, double x0, double y0, double x1,
                           double y1) {
  LineSet set;
  set.lines.push_back(Polyline{{Vec2(x0, y0), Vec2(x1, y1)}});
  return rasterize_heatmap(set, w, h);
}

TEST(LinePr, SelfMatchIsPerfectAtTopThreshold) {
  const LineHeatmap gt = SegmentHeatmap(100, 100, 10, 20, 90, 60);
  const PRCurve curve = line_pr(gt, gt);
  const PRPoint& top = curve.points.back();
  EXPECT_EQ(top.tau, 255.0);
  EXPECT_EQ(top.precision, 1.0);
  EXPECT_EQ(top.recall, 1.0);
  EXPECT_EQ(top.f, 1.0);
  EXPECT_EQ(curve.f_max, 1.0);
}

TEST(LinePr, EmptyPredictionHasZeroPrecisionAndRecall) {
  const LineHeatmap gt = SegmentHeatmap(60, 60, 5, 5, 50, 40);
  const PRCurve curve = line_pr(LineHeatmap(60, 60), gt);
  for (const PRPoint& p : curve.points) {
    EXPECT_EQ(p.precision, 0.0);
    EXPECT_EQ(p.recall, 0.0);
    EXPECT_EQ(p.f, 0.0);
  }
}

TEST(LinePr, TranslationBeyondToleranceNeverMatches) {
  MetricConfig config;
  config.match_tolerance = 3.0;
  const LineHeatmap gt = SegmentHeatmap(80, 80, 10, 10, 70, 10);
  // Bands are 3 px tall, so after a 6 px shift the closest pair is 4 px apart.
  const LineHeatmap shifted = SegmentHeatmap(80, 80, 10, 16, 70, 16);
  const PRCurve curve = line_pr(shifted, gt, config);
  for (const PRPoint& p : curve.points) EXPECT_EQ(p.f, 0.0);
}

TEST(LinePr, ThresholdKeepsShortLines) {
  LineSet set;
  set.lines.push_back(Polyline{{Vec2(5, 5), Vec2(15, 5)}});   // length 10
  set.lines.push_back(Polyline{{Vec2(5, 30), Vec2(65, 30)}});  // length 60
  const LineHeatmap h = rasterize_heatmap(set, 80, 40);
  const PRCurve at_most = line_pr(h, h);
  EXPECT_EQ(at_most.points[0].predicted, 0u);   // tau 5
  EXPECT_EQ(at_most.points[1].predicted, 35u);  // tau 10: short line only
  EXPECT_EQ(at_most.points[4].predicted, 35u + 185u);  // tau 80: both
  MetricConfig config;
  config.threshold_mode = ThresholdMode::kAtLeast;
  const PRCurve at_least = line_pr(h, h, config);
  EXPECT_EQ(at_least.points[3].predicted, 185u);  // tau 40: long line only
}

TEST(LinePr, MatchingIsOneToOne) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const LineSet a = testing::RandomLineSet(rng, 50, 50, 4);
    const LineSet b = testing::RandomLineSet(rng, 50, 50, 2);
    const PRCurve curve =
        line_pr(rasterize_heatmap(a, 50, 50), rasterize_heatmap(b, 50, 50));
    for (const PRPoint& p : curve.points) {
      EXPECT_LE(p.matched, std::min(p.predicted, p.ground_truth));
      EXPECT_GE(p.precision, 0.0);
      EXPECT_LE(p.precision, 1.0);
      EXPECT_GE(p.recall, 0.0);
      EXPECT_LE(p.recall, 1.0);
    }
  }
}

TEST(MatchEdgePixels, GreedyNearestFirst) {
  // Predicted at x = 1 and 3, ground truth at x = 2 and 5 on one row; with
  // tolerance 2.5 nearest-first pairs (1,2) then (3,5).
  std::vector<std::uint8_t> pred(8, 0);
  std::vector<std::uint8_t> gt(8, 0);
  pred[1] = pred[3] = 1;
  gt[2] = gt[5] = 1;
  EXPECT_EQ(MatchEdgePixels(pred, gt, 8, 1, 2.5), 2u);
  EXPECT_EQ(MatchEdgePixels(pred, gt, 8, 1, 1.5), 1u);
}

TEST(MetricConfig, Validation) {
  MetricConfig config;
  config.tau_list = {5, 5};
  EXPECT_THROW(config.Validate(), Error);
  config.tau_list = {5, 10};
  config.match_tolerance = 0.0;
  EXPECT_THROW(config.Validate(), Error);
  EXPECT_NEAR(MetricConfig{}.ToleranceFor(300, 400), 5.0, 1e-12);
}

}  // namespace
}  // namespace fishline
