#include <gtest/gtest.h>

#include <cstring>

#include "../support/oracles.hpp"
#include "mouthpipe/error.hpp"
#include "mouthpipe/segmentation.hpp"

using namespace mouthpipe;

namespace {

Frame one_pixel(Rgb c) {
  Frame f(1, 1);
  f.set(0, 0, c);
  return f;
}

Mask from_rows(std::initializer_list<const char*> rows) {
  const auto w = std::uint32_t(std::strlen(*rows.begin()));
  Mask m(w, std::uint32_t(rows.size()));
  std::uint32_t y = 0;
  for (const char* r : rows) {
    for (std::uint32_t x = 0; x < w; ++x) m.set(x, y, r[x] == '#');
    ++y;
  }
  return m;
}

}  // namespace

TEST(Threshold, DarkButNotRedIsRejected) {
  EXPECT_FALSE(threshold(one_pixel({10, 10, 10}), {60, 50, 10}).get(0, 0));
}

TEST(Threshold, DarkRedIsAccepted) {
  EXPECT_TRUE(threshold(one_pixel({80, 20, 20}), {60, 50, 10}).get(0, 0));
}

TEST(Threshold, WhiteNeverPasses) {
  Frame f(8, 8);
  std::fill(f.pixels.begin(), f.pixels.end(), 255);
  for (int i_min = 0; i_min <= 255; i_min += 15) EXPECT_EQ(threshold(f, {i_min, 0, 1}).count(), 0u);
  EXPECT_EQ(threshold(f, {255, 0, 1}).count(), 0u);
}

TEST(Threshold, BoundaryIsStrict) {
  // sum == 3*i_min is not below the intensity bound; r == r_max is not above.
  EXPECT_FALSE(threshold(one_pixel({60, 60, 60}), {60, 10, 1}).get(0, 0));
  EXPECT_TRUE(threshold(one_pixel({60, 60, 59}), {60, 10, 1}).get(0, 0));
  EXPECT_FALSE(threshold(one_pixel({50, 0, 0}), {60, 50, 1}).get(0, 0));
  EXPECT_TRUE(threshold(one_pixel({51, 0, 0}), {60, 50, 1}).get(0, 0));
}

TEST(Threshold, MatchesBruteForceOnRandomFrames) {
  oracle::Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const Frame f = oracle::random_frame(rng, 32, 24);
    const int i_min = oracle::uniform(rng, 0, 255), r_max = oracle::uniform(rng, 0, 255);
    ASSERT_EQ(threshold(f, {i_min, r_max, 1}), oracle::threshold(f, i_min, r_max));
  }
}

TEST(Threshold, MonotoneInBothBounds) {
  oracle::Rng rng(2);
  for (int t = 0; t < 40; ++t) {
    const Frame f = oracle::random_frame(rng, 16, 16);
    const int i_min = oracle::uniform(rng, 0, 200), r_max = oracle::uniform(rng, 0, 200);
    const int d = oracle::uniform(rng, 1, 55);
    const Mask base = threshold(f, {i_min, r_max, 1});
    const Mask wider = threshold(f, {i_min + d, r_max, 1});
    const Mask stricter = threshold(f, {i_min, r_max + d, 1});
    for (std::size_t i = 0; i < base.bits.size(); ++i) {
      ASSERT_LE(base.bits[i], wider.bits[i]);
      ASSERT_LE(stricter.bits[i], base.bits[i]);
    }
  }
}

TEST(SegmentationParams, RangeChecks) {
  EXPECT_NO_THROW((SegmentationParams{0, 255, 0}.validate()));
  EXPECT_THROW((SegmentationParams{256, 50, 10}.validate()), Error);
  EXPECT_THROW((SegmentationParams{60, -1, 10}.validate()), Error);
}

TEST(Components, DiagonalNeighboursConnect) {
  const auto m = from_rows({"#.", ".#"});
  const auto c = largest_component(m, 1);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->count(), 2u);
}

TEST(Components, LargestWins) {
  const auto m = from_rows({"###..#", "##...#", ".....#"});
  const auto c = largest_component(m, 1);
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, from_rows({"###...", "##....", "......"}));
}

TEST(Components, EmptyMaskIsNoBlob) {
  EXPECT_FALSE(largest_component(Mask(5, 5), 1));
  EXPECT_FALSE(largest_component(Mask(5, 5), 0));
  EXPECT_FALSE(largest_component(Mask(0, 0), 0));
}

TEST(Components, BelowMinimumIsNoBlob) {
  const auto m = from_rows({"##..", "....", "..#."});
  EXPECT_FALSE(largest_component(m, 3));
  EXPECT_TRUE(largest_component(m, 2));
}

TEST(Components, TieGoesToFirstInRowMajorOrder) {
  // Equal sizes; the right-hand component's top pixel comes first.
  const auto m = from_rows({"....##", "#....#", "##...."});
  const auto c = largest_component(m, 1);
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, from_rows({"....##", ".....#", "......"}));
}

TEST(Components, USHapeMergesLabels) {
  // Two arms that only meet at the bottom force a label merge.
  const auto m = from_rows({"#...#", "#...#", "#...#", "#####", "....."});
  const auto c = largest_component(m, 1);
  ASSERT_TRUE(c);
  EXPECT_EQ(*c, m);
}

TEST(Components, MatchesFloodFillOracle) {
  oracle::Rng rng(3);
  for (int t = 0; t < 120; ++t) {
    const auto w = std::uint32_t(oracle::uniform(rng, 1, 40)), h = std::uint32_t(oracle::uniform(rng, 1, 40));
    const Mask m = oracle::random_mask(rng, w, h, oracle::uniform_real(rng, 0.02, 0.6));
    const auto min_px = std::uint32_t(oracle::uniform(rng, 0, 12));
    const auto got = largest_component(m, min_px);
    const auto want = oracle::largest_component(m, min_px);
    ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << t;
    if (!got) continue;
    ASSERT_EQ(*got, *want) << "trial " << t;
    for (std::size_t i = 0; i < m.bits.size(); ++i) ASSERT_LE(got->bits[i], m.bits[i]);
  }
}
