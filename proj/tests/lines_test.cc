#include "fishline/lines.h"

#include <random>

#include <gtest/gtest.h>

#include "fishline/error.h"
#include "test_util.h"

namespace fishline {
namespace {

LineSet SingleSegment() {
  LineSet set;
  set.lines.push_back(Polyline{{Vec2(5.0, 10.0), Vec2(15.0, 10.0)}});
  return set;
}

TEST(Polyline, LengthIsSumOfSegments) {
  const Polyline line{{Vec2(0, 0), Vec2(3, 4), Vec2(3, 10)}};
  EXPECT_DOUBLE_EQ(line.Length(), 11.0);
}

TEST(LineSet, ValidateRejectsShortAndRepeatedChains) {
  LineSet one_vertex;
  one_vertex.lines.push_back(Polyline{{Vec2(1, 1)}});
  EXPECT_THROW(one_vertex.Validate(), Error);
  LineSet repeated;
  repeated.lines.push_back(Polyline{{Vec2(1, 1), Vec2(1, 1), Vec2(2, 2)}});
  EXPECT_THROW(repeated.Validate(), Error);
  EXPECT_NO_THROW(repeated.Sanitized().Validate());
  EXPECT_EQ(repeated.Sanitized().lines[0].size(), 2u);
}

TEST(Densify, KeepsVerticesAndBoundsSpacing) {
  const Polyline line{{Vec2(0, 0), Vec2(10, 0), Vec2(10, 3.5)}};
  const Polyline dense = Densify(line, 1.0);
  EXPECT_EQ(dense.points.front(), line.points[0]);
  EXPECT_EQ(dense.points.back(), line.points[2]);
  EXPECT_NE(std::find(dense.points.begin(), dense.points.end(), line.points[1]),
            dense.points.end());
  for (size_t i = 1; i < dense.size(); ++i) {
    EXPECT_LE((dense.points[i] - dense.points[i - 1]).norm(), 1.0 + 1e-12);
  }
  EXPECT_NEAR(dense.Length(), line.Length(), 1e-12);
}

TEST(RasterizeHeatmap, EmptySetIsZero) {
  const LineHeatmap h = rasterize_heatmap(LineSet{}, 16, 12);
  for (double v : h.data()) EXPECT_EQ(v, 0.0);
}

TEST(RasterizeHeatmap, SingleSegmentBand) {
  const LineHeatmap h = rasterize_heatmap(SingleSegment(), 24, 20);
  size_t band = 0;
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 24; ++x) {
      const double d2 =
          SquaredDistanceToSegment(Vec2(x, y), Vec2(5, 10), Vec2(15, 10));
      if (d2 <= 1.0) {
        ++band;
        EXPECT_EQ(h.at(x, y), 10.0) << x << "," << y;
      } else {
        EXPECT_EQ(h.at(x, y), 0.0) << x << "," << y;
      }
    }
  }
  // Rows 9..11 over x = 5..15 plus the two end caps (4,10) and (16,10).
  EXPECT_EQ(band, 35u);
}

TEST(RasterizeHeatmap, MatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const LineSet set = testing::RandomLineSet(rng, 40, 30, 6);
    const LineHeatmap fast = rasterize_heatmap(set, 40, 30);
    const LineHeatmap slow = testing::BruteForceHeatmap(set, 40, 30);
    EXPECT_EQ(fast.data(), slow.data()) << "trial " << trial;
  }
}

TEST(RasterizeHeatmap, TiesGoToLongerChain) {
  LineSet set;
  // Pixel row 5 is at distance 1 from both chains.
  set.lines.push_back(Polyline{{Vec2(0, 4), Vec2(8, 4)}});
  set.lines.push_back(Polyline{{Vec2(0, 6), Vec2(12, 6)}});
  const LineHeatmap h = rasterize_heatmap(set, 14, 10);
  EXPECT_EQ(h.at(3, 5), 12.0);
  EXPECT_EQ(h.at(3, 4), 8.0);
  // Swapping the input order must not matter.
  std::swap(set.lines[0], set.lines[1]);
  EXPECT_EQ(rasterize_heatmap(set, 14, 10).at(3, 5), 12.0);
}

TEST(RasterizeHeatmap, ValuesAreChainLengths) {
  std::mt19937_64 rng(19);
  const LineSet set = testing::RandomLineSet(rng, 50, 50, 8);
  std::vector<double> lengths{0.0};
  for (const Polyline& line : set.lines) lengths.push_back(line.Length());
  for (double v : rasterize_heatmap(set, 50, 50).data()) {
    EXPECT_NE(std::find(lengths.begin(), lengths.end(), v), lengths.end());
  }
}

TEST(LinesProperty, DensificationLeavesHeatmapUnchanged) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const LineSet set = testing::RandomLineSet(rng, 48, 48, 5);
    const LineHeatmap coarse = rasterize_heatmap(set, 48, 48);
    const LineHeatmap fine = rasterize_heatmap(Densify(set, 0.7), 48, 48);
    ASSERT_EQ(coarse.data().size(), fine.data().size());
    size_t differing = 0;
    for (size_t i = 0; i < coarse.data().size(); ++i) {
      // Subdivision only perturbs lengths and distances by rounding.
      if (std::abs(coarse.data()[i] - fine.data()[i]) > 1e-9) ++differing;
    }
    EXPECT_EQ(differing, 0u) << "trial " << trial;
  }
}

TEST(Partition, AllZero) {
  const PixelPartition p = partition(LineHeatmap(7, 5));
  EXPECT_EQ(p.positive_count(), 0u);
  EXPECT_EQ(p.negative_count(), 35u);
}

TEST(Partition, SingleSegmentBandCount) {
  const PixelPartition p = partition(rasterize_heatmap(SingleSegment(), 24, 20));
  EXPECT_EQ(p.positive_count(), 35u);
  EXPECT_EQ(p.positive_count() + p.negative_count(), 24u * 20u);
}

TEST(Partition, FullSupport) {
  LineHeatmap h(4, 3);
  for (double& v : h.data()) v = 2.5;
  const PixelPartition p = partition(h);
  EXPECT_EQ(p.negative_count(), 0u);
  EXPECT_EQ(p.positive_count(), 12u);
}

TEST(Partition, CountsCoverLattice) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const PixelPartition p =
        partition(rasterize_heatmap(testing::RandomLineSet(rng, 33, 21, 4), 33, 21));
    EXPECT_EQ(p.positive_count() + p.negative_count(), 33u * 21u);
  }
}

}  // namespace
}  // namespace fishline
