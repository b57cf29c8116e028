// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "songseg/rng.hpp"
#include "songseg/targets.hpp"
#include "test_util.hpp"

using namespace songseg;
using namespace songseg::testing;

TEST_CASE("make_grid frame counts") {
  CHECK(make_grid(420.0, 25.0 / 3.0).num_frames == 3500);
  CHECK(make_grid(0.12, 25.0 / 3.0).num_frames == 1);
  CHECK(make_grid(30.0, 25.0).num_frames == 750);
  CHECK(make_grid(90.0, 25.0 / 3.0).num_frames == 750);
  CHECK(make_grid(10.04, 25.0 / 3.0).num_frames == 84);
  CHECK(catch_errc([] { make_grid(0.0, 25.0); }) == Errc::non_positive_duration);
  CHECK(catch_errc([] { make_grid(10.0, -1.0); }) == Errc::non_positive_duration);
}

namespace {

Annotation two_segments(double boundary, double end) {
  Annotation ann;
  ann.segments = {{0.0, Label::intro}, {boundary, Label::verse}};
  ann.end = end;
  return ann;
}

}  // namespace

TEST_CASE("boundary_targets gaussian shape") {
  const FrameGrid grid = make_grid(24.0, 25.0 / 3.0);
  const auto target = boundary_targets(two_segments(12.0, 24.0), grid);
  REQUIRE(target.size() == 200);
  // center frame 100 hits exactly one
  CHECK(target[100] == 1.0);
  // ten frames out: exp(-4.5)
  const double edge = std::exp(-4.5);
  CHECK(near(target[110], edge, 1e-12));
  CHECK(near(target[90], edge, 1e-12));
  // strictly zero beyond the half width
  CHECK(target[111] == 0.0);
  CHECK(target[89] == 0.0);
  CHECK(target[0] == 0.0);
}

TEST_CASE("boundary_targets includes a nonzero first start") {
  const FrameGrid grid = make_grid(24.0, 25.0 / 3.0);
  Annotation ann;
  ann.segments = {{3.0, Label::intro}, {12.0, Label::verse}};
  ann.end = 24.0;
  const auto target = boundary_targets(ann, grid);
  CHECK(target[25] == 1.0);  // 3 s at 25/3 Hz
  CHECK(target[100] == 1.0);
}

TEST_CASE("boundary_targets combines nearby boundaries by max") {
  const FrameGrid grid = make_grid(24.0, 25.0 / 3.0);
  Annotation ann;
  ann.segments = {{0.0, Label::intro}, {12.0, Label::verse}, {12.48, Label::chorus}};
  ann.end = 24.0;
  const auto target = boundary_targets(ann, grid);

  // oracle: evaluate each boundary's kernel alone and combine by max
  const double sigma = 10.0 / 3.0;
  auto kernel = [&](long t, long center) {
    if (std::abs(t - center) > 10) return 0.0;
    const double d = static_cast<double>(t - center);
    return std::exp(-(d * d) / (2.0 * sigma * sigma));
  };
  for (long t = 85; t <= 120; ++t) {
    const double expect = std::max(kernel(t, 100), kernel(t, 104));
    CHECK(near(target[static_cast<std::size_t>(t)], expect, 1e-12));
    CHECK(target[static_cast<std::size_t>(t)] <= 1.0);
  }
}

TEST_CASE("boundary_targets monotone under boundary insertion") {
  const FrameGrid grid = make_grid(60.0, 25.0 / 3.0);
  Rng rng(5);
  for (int iter = 0; iter < 20; ++iter) {
    Annotation ann;
    double t = 0.0;
    const int n = rng.uniform_int(1, 5);
    for (int i = 0; i < n; ++i) {
      ann.segments.push_back(Segment{t, static_cast<Label>(i % kNumClasses)});
      t += rng.uniform(4.0, 12.0);
    }
    ann.end = 60.0;
    const auto base = boundary_targets(ann, grid);
    Annotation more = ann;
    const double extra = ann.segments.back().start + rng.uniform(1.0, 3.0);
    more.segments.push_back(Segment{extra, Label::outro});
    const auto grown = boundary_targets(more, grid);
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(grown[i] >= base[i]);
  }
}

TEST_CASE("function_targets assigns by frame left edge") {
  const FrameGrid grid = make_grid(24.0, 25.0 / 3.0);
  const auto classes = function_targets(two_segments(12.0, 24.0), grid);
  REQUIRE(classes.size() == 200);
  CHECK(classes[0] == static_cast<int>(Label::intro));
  CHECK(classes[99] == static_cast<int>(Label::intro));
  CHECK(classes[100] == static_cast<int>(Label::verse));  // left edge exactly 12.0
  CHECK(classes[199] == static_cast<int>(Label::verse));
}

TEST_CASE("function_targets boundary between frame edges") {
  const FrameGrid grid = make_grid(24.0, 25.0 / 3.0);
  const auto classes = function_targets(two_segments(12.05, 24.0), grid);
  CHECK(classes[100] == static_cast<int>(Label::intro));  // left edge 12.0 < 12.05
  CHECK(classes[101] == static_cast<int>(Label::verse));
}

TEST_CASE("function_targets constant for a single segment") {
  const FrameGrid grid = make_grid(10.0, 25.0 / 3.0);
  Annotation ann;
  ann.segments = {{0.0, Label::bridge}};
  ann.end = 10.0;
  const auto classes = function_targets(ann, grid);
  for (int c : classes) CHECK(c == static_cast<int>(Label::bridge));
}

TEST_CASE("function_targets per-frame interval-lookup oracle") {
  Rng rng(11);
  for (int iter = 0; iter < 20; ++iter) {
    Annotation ann;
    double t = 0.0;
    const int n = rng.uniform_int(1, 7);
    for (int i = 0; i < n; ++i) {
      ann.segments.push_back(Segment{t, static_cast<Label>(rng.uniform_int(0, kNumClasses - 1))});
      t += rng.uniform(1.0, 9.0);
    }
    ann.end = t + rng.uniform(1.0, 5.0);
    const FrameGrid grid = make_grid(ann.end, 25.0 / 3.0);
    const auto classes = function_targets(ann, grid);
    for (std::size_t f = 0; f < grid.num_frames; ++f) {
      const double left = grid.frame_time(f);
      int expect = static_cast<int>(ann.segments.front().label);
      for (const auto& s : ann.segments)
        if (s.start <= left + 1e-9) expect = static_cast<int>(s.label);
      CHECK(classes[f] == expect);
    }
  }
}

TEST_CASE("loss_masks policies") {
  const FrameGrid grid = make_grid(60.0, 25.0 / 3.0);
  Annotation ann = two_segments(12.0, 60.0);

  SUBCASE("full") {
    const auto masks = loss_masks(ann, grid, MaskPolicy::full);
    for (std::size_t i = 0; i < grid.num_frames; ++i) {
      CHECK(masks.boundary[i] == 1.0);
      CHECK(masks.function[i] == 1.0);
    }
  }
  SUBCASE("gem zeroes the boundary mask") {
    const auto masks = loss_masks(ann, grid, MaskPolicy::gem);
    for (std::size_t i = 0; i < grid.num_frames; ++i) {
      CHECK(masks.boundary[i] == 0.0);
      CHECK(masks.function[i] == 1.0);
    }
  }
  SUBCASE("hook dilates valid ranges by 5 s") {
    ann.valid_ranges = {{10.0, 20.0}};
    const auto masks = loss_masks(ann, grid, MaskPolicy::hook);
    for (std::size_t t = 0; t < grid.num_frames; ++t) {
      // membership oracle on the integer ms grid: left edge t*0.12 in [5, 25)
      const bool inside = t * 12 >= 500 && t * 12 < 2500;
      CHECK(masks.function[t] == (inside ? 1.0 : 0.0));
      CHECK(masks.boundary[t] == masks.function[t]);
    }
  }
  SUBCASE("hook without ranges") {
    CHECK(catch_errc([&] { loss_masks(ann, grid, MaskPolicy::hook); }) ==
          Errc::missing_valid_ranges);
  }
}

TEST_CASE("make_targets composes and matches the grid") {
  Annotation ann = two_segments(12.0, 60.0);
  const FrameGrid grid = make_grid(60.0, 25.0 / 3.0);
  const FrameTargets t = make_targets(ann, grid, MaskPolicy::full);
  CHECK(t.boundary.size() == grid.num_frames);
  CHECK(t.function.size() == grid.num_frames);
  CHECK(t.boundary_mask.size() == grid.num_frames);
  CHECK(t.function_mask.size() == grid.num_frames);
  for (double v : t.boundary) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
