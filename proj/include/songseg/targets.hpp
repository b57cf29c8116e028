// SPDX-License-Identifier: Apache-2.0
//
// Frame-level training targets: smoothed boundary curves, per-frame class
// indices, and the per-task loss masks, all on the model frame grid.
#pragma once

#include <cstddef>
#include <vector>

#include "songseg/annotation.hpp"

namespace songseg {

inline constexpr double kModelFrameRate = 25.0 / 3.0;

struct FrameGrid {
  double frame_rate = kModelFrameRate;
  std::size_t num_frames = 0;
  double duration = 0.0;

  // Left edge of frame t; frame t covers [t/rate, (t+1)/rate).
  double frame_time(std::size_t t) const { return static_cast<double>(t) / frame_rate; }
};

// num_frames = ceil(duration * frame_rate), guarded against binary rounding so
// exact products (420 s at 25/3 Hz -> 3500) land on the integer.
FrameGrid make_grid(double duration, double frame_rate = kModelFrameRate);

// Grid with an externally fixed frame count (e.g. the downsampler output).
FrameGrid grid_for_frames(std::size_t num_frames, double frame_rate = kModelFrameRate);

// First frame whose left edge is at or after `seconds` (epsilon-guarded).
long frame_at_or_after(double seconds, double frame_rate);
// Frame whose center is nearest to `seconds`.
long nearest_frame(double seconds, double frame_rate);

struct FrameTargets {
  std::vector<double> boundary;       // smoothed curve in [0,1]
  std::vector<int> function;          // class index per frame
  std::vector<double> boundary_mask;  // 0/1
  std::vector<double> function_mask;  // 0/1
  FrameGrid grid;
};

// Gaussian-smoothed boundary curve. Boundaries are the interior segment
// starts (plus the first start when it is > 0); each lights a window of
// half_width frames per side with sigma = half_width / 3 and the window edge
// at 3 sigma. Overlapping windows combine by pointwise max so values stay
// in [0,1].
std::vector<double> boundary_targets(const Annotation& ann, const FrameGrid& grid, int half_width = 10);

// Class of the segment containing each frame's left edge; frames at or past
// the end keep the last segment's class.
std::vector<int> function_targets(const Annotation& ann, const FrameGrid& grid);

struct LossMasks {
  std::vector<double> boundary;
  std::vector<double> function;
};

// full: both all-ones. hook: valid_ranges dilated by 5 s per side gate both
// losses. gem: function all-ones, boundary all-zeros.
LossMasks loss_masks(const Annotation& ann, const FrameGrid& grid, MaskPolicy policy);

FrameTargets make_targets(const Annotation& ann, const FrameGrid& grid, MaskPolicy policy,
                          int half_width = 10);

}  // namespace songseg
