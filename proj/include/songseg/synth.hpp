// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic tracks: piecewise-constant class means plus white noise,
// with an additive transient bump at each interior boundary. The returned
// annotation is the generative ground truth.
#pragma once

#include <cstdint>

#include "songseg/annotation.hpp"
#include "songseg/feature_io.hpp"

namespace songseg {

struct SynthSpec {
  double min_duration = 60.0;  // seconds; durations are snapped to 0.12 s so
  double max_duration = 120.0; // the 25 Hz -> 25/3 Hz grids line up exactly
  int min_segments = 4;
  int max_segments = 10;
  double min_segment_seconds = 6.0;
  std::size_t dim = 64;
  double frame_rate = 25.0;
  uint64_t class_seed = 1234;     // corpus-level: class means and transient direction
  double mean_scale = 1.0;
  double noise_sigma = 0.3;
  double transient_amp = 2.0;
  double transient_width = 0.5;   // seconds of support around each boundary
  std::string extractor_id = "synth";
};

struct SynthSong {
  FeatureTensor features;
  Annotation annotation;
};

SynthSong synth_song(uint64_t seed, const SynthSpec& spec, SourceId source = 0);

// Class-conditional mean vector (depends only on spec.class_seed / dim / scale).
std::vector<double> synth_class_mean(const SynthSpec& spec, int cls);

}  // namespace songseg
