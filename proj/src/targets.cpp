// SPDX-License-Identifier: Apache-2.0
#include "songseg/targets.hpp"

#include <algorithm>
#include <cmath>

namespace songseg {

namespace {
// Absolute guard for products like 420 * (25/3) that should be integers but
// land one ulp above.
constexpr double kGridEps = 1e-6;
constexpr double kHookDilationSeconds = 5.0;
}  // namespace

FrameGrid make_grid(double duration, double frame_rate) {
  if (!(duration > 0.0)) fail(Errc::non_positive_duration, "duration " + std::to_string(duration));
  if (!(frame_rate > 0.0)) fail(Errc::non_positive_duration, "frame rate " + std::to_string(frame_rate));
  FrameGrid g;
  g.frame_rate = frame_rate;
  g.duration = duration;
  g.num_frames = static_cast<std::size_t>(std::ceil(duration * frame_rate - kGridEps));
  if (g.num_frames == 0) g.num_frames = 1;
  return g;
}

FrameGrid grid_for_frames(std::size_t num_frames, double frame_rate) {
  FrameGrid g;
  g.frame_rate = frame_rate;
  g.num_frames = num_frames;
  g.duration = static_cast<double>(num_frames) / frame_rate;
  return g;
}

long frame_at_or_after(double seconds, double frame_rate) {
  return static_cast<long>(std::ceil(seconds * frame_rate - kGridEps));
}

long nearest_frame(double seconds, double frame_rate) {
  return std::lround(seconds * frame_rate);
}

std::vector<double> boundary_targets(const Annotation& ann, const FrameGrid& grid, int half_width) {
  ann.validate();
  const std::size_t nf = grid.num_frames;
  std::vector<double> target(nf, 0.0);
  const double sigma = static_cast<double>(half_width) / 3.0;
  const double denom = 2.0 * sigma * sigma;

  for (std::size_t i = 0; i < ann.segments.size(); ++i) {
    const double b = ann.segments[i].start;
    if (i == 0 && b <= 0.0) continue;  // the trivial track-start boundary carries no target
    long center = nearest_frame(b, grid.frame_rate);
    if (center < 0) center = 0;
    if (center >= static_cast<long>(nf)) center = static_cast<long>(nf) - 1;
    const long lo = std::max<long>(0, center - half_width);
    const long hi = std::min<long>(static_cast<long>(nf) - 1, center + half_width);
    for (long t = lo; t <= hi; ++t) {
      const double d = static_cast<double>(t - center);
      const double v = std::exp(-(d * d) / denom);
      auto& cell = target[static_cast<std::size_t>(t)];
      cell = std::max(cell, v);
    }
  }
  return target;
}

std::vector<int> function_targets(const Annotation& ann, const FrameGrid& grid) {
  ann.validate();
  const std::size_t nf = grid.num_frames;
  std::vector<int> out(nf, static_cast<int>(ann.segments.back().label));
  // Per-segment frame ranges; segment i owns frames whose left edge lies in
  // [start_i, start_{i+1}).
  for (std::size_t i = 0; i < ann.segments.size(); ++i) {
    long first = i == 0 ? 0 : frame_at_or_after(ann.segments[i].start, grid.frame_rate);
    long last = i + 1 < ann.segments.size()
                    ? frame_at_or_after(ann.segments[i + 1].start, grid.frame_rate)
                    : static_cast<long>(nf);
    first = std::clamp<long>(first, 0, static_cast<long>(nf));
    last = std::clamp<long>(last, first, static_cast<long>(nf));
    std::fill(out.begin() + first, out.begin() + last, static_cast<int>(ann.segments[i].label));
  }
  return out;
}

LossMasks loss_masks(const Annotation& ann, const FrameGrid& grid, MaskPolicy policy) {
  const std::size_t nf = grid.num_frames;
  LossMasks masks;
  switch (policy) {
    case MaskPolicy::full:
      masks.boundary.assign(nf, 1.0);
      masks.function.assign(nf, 1.0);
      return masks;
    case MaskPolicy::gem:
      masks.boundary.assign(nf, 0.0);
      masks.function.assign(nf, 1.0);
      return masks;
    case MaskPolicy::hook:
      break;
  }
  if (ann.valid_ranges.empty())
    fail(Errc::missing_valid_ranges, "hook policy needs valid_ranges");
  masks.function.assign(nf, 0.0);
  for (const auto& r : ann.valid_ranges) {
    const double lo = std::max(0.0, r.begin - kHookDilationSeconds);
    const double hi = std::min(grid.duration, r.end + kHookDilationSeconds);
    long first = std::clamp<long>(frame_at_or_after(lo, grid.frame_rate), 0, static_cast<long>(nf));
    long last = std::clamp<long>(frame_at_or_after(hi, grid.frame_rate), first, static_cast<long>(nf));
    std::fill(masks.function.begin() + first, masks.function.begin() + last, 1.0);
  }
  masks.boundary = masks.function;
  return masks;
}

FrameTargets make_targets(const Annotation& ann, const FrameGrid& grid, MaskPolicy policy,
                          int half_width) {
  FrameTargets t;
  t.grid = grid;
  t.boundary = boundary_targets(ann, grid, half_width);
  t.function = function_targets(ann, grid);
  auto masks = loss_masks(ann, grid, policy);
  t.boundary_mask = std::move(masks.boundary);
  t.function_mask = std::move(masks.function);
  return t;
}

}  // namespace songseg
