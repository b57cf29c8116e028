// SPDX-License-Identifier: Apache-2.0
//
// Head outputs -> structured annotation: sigmoid, local-maxima filtering with
// gap suppression, frame-to-timestamp conversion, and per-segment labeling by
// averaged class probabilities.
#pragma once

#include <span>

#include "songseg/annotation.hpp"
#include "songseg/model.hpp"
#include "songseg/targets.hpp"

namespace songseg {

struct DecodeConfig {
  int peak_window = 6;         // frames a peak must dominate on each side
  double prob_threshold = 0.3; // minimum peak probability
  int min_gap = 8;             // accepted peaks are at least this many frames apart
  SourceId source = 0;         // inference pins the HarmonixSet-style source

  void validate() const;
};

// Boundary times in seconds, always starting 0.0 and ending grid.duration.
std::vector<double> pick_boundaries(std::span<const double> boundary_logits, const FrameGrid& grid,
                                    const DecodeConfig& cfg);

// Labels each [boundary_i, boundary_{i+1}) span by the argmax of averaged
// softmax probabilities; zero-frame spans merge into the following one.
Annotation label_segments(CMatView function_logits, std::span<const double> boundaries,
                          const FrameGrid& grid, SourceId source);

Annotation infer(const FeatureTensor& x, const ModelParams& params, const DecodeConfig& cfg);

}  // namespace songseg
