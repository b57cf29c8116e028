// SPDX-License-Identifier: Apache-2.0
#include "songseg/synth.hpp"

#include <algorithm>
#include <cmath>

#include "songseg/rng.hpp"

namespace songseg {

namespace {
constexpr double kGridStep = 0.12;  // 3 input frames at 25 Hz
constexpr uint64_t kMeanStream = 0x10;
constexpr uint64_t kTransientStream = 0x20;
}  // namespace

std::vector<double> synth_class_mean(const SynthSpec& spec, int cls) {
  Rng rng = Rng(spec.class_seed).fork(kMeanStream + static_cast<uint64_t>(cls));
  std::vector<double> mean(spec.dim);
  for (auto& v : mean) v = rng.normal() * spec.mean_scale;
  return mean;
}

SynthSong synth_song(uint64_t seed, const SynthSpec& spec, SourceId source) {
  Rng rng(mix_seed(seed, 0x50f6ULL));
  SynthSong song;

  // Duration snapped to the 0.12 s joint grid.
  double duration = rng.uniform(spec.min_duration, spec.max_duration);
  long grid_steps = std::lround(duration / kGridStep);
  if (grid_steps < 1) grid_steps = 1;
  duration = static_cast<double>(grid_steps) * kGridStep;
  duration = std::round(duration * 1000.0) / 1000.0;  // keep times on the ms grid

  // Segment count limited by the minimum segment length.
  int max_fit = std::max(1, static_cast<int>(duration / spec.min_segment_seconds));
  int n_seg = std::clamp(rng.uniform_int(spec.min_segments, spec.max_segments), 1, max_fit);

  // Lengths: minimum share plus a random split of the remainder.
  std::vector<double> weights(static_cast<std::size_t>(n_seg));
  double wsum = 0.0;
  for (auto& w : weights) {
    w = 0.05 + rng.uniform();
    wsum += w;
  }
  const double spare = duration - spec.min_segment_seconds * n_seg;
  std::vector<double> starts(static_cast<std::size_t>(n_seg), 0.0);
  double cursor = 0.0;
  for (int i = 0; i < n_seg; ++i) {
    starts[static_cast<std::size_t>(i)] = std::round(cursor * 1000.0) / 1000.0;
    cursor += spec.min_segment_seconds + spare * weights[static_cast<std::size_t>(i)] / wsum;
  }

  // Labels: adjacent segments always differ so every boundary is real.
  std::vector<int> labels(static_cast<std::size_t>(n_seg));
  labels[0] = rng.uniform_int(0, kNumClasses - 1);
  for (int i = 1; i < n_seg; ++i) {
    int pick = rng.uniform_int(0, kNumClasses - 2);
    if (pick >= labels[static_cast<std::size_t>(i - 1)]) ++pick;
    labels[static_cast<std::size_t>(i)] = pick;
  }

  song.annotation.source = source;
  song.annotation.end = duration;
  for (int i = 0; i < n_seg; ++i)
    song.annotation.segments.push_back(
        Segment{starts[static_cast<std::size_t>(i)], static_cast<Label>(labels[static_cast<std::size_t>(i)])});
  song.annotation.validate();

  // Features.
  const std::size_t frames = static_cast<std::size_t>(std::lround(duration * spec.frame_rate));
  FeatureTensor& f = song.features;
  f.frames = frames;
  f.dim = spec.dim;
  f.frame_rate = spec.frame_rate;
  f.extractor_id = spec.extractor_id;
  f.window = WindowKind::local30;
  f.data.resize(frames * spec.dim);

  std::vector<std::vector<double>> means(kNumClasses);
  for (int c = 0; c < kNumClasses; ++c) means[static_cast<std::size_t>(c)] = synth_class_mean(spec, c);

  Rng trng = Rng(spec.class_seed).fork(kTransientStream);
  std::vector<double> transient(spec.dim);
  for (auto& v : transient) v = trng.normal() * spec.transient_amp;

  const double tsigma = spec.transient_width / 4.0;
  Rng noise = rng.fork(1);
  std::size_t seg_idx = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    const double time = static_cast<double>(t) / spec.frame_rate;
    while (seg_idx + 1 < starts.size() && time >= starts[seg_idx + 1] - 1e-9) ++seg_idx;
    const auto& mean = means[static_cast<std::size_t>(labels[seg_idx])];

    double bump = 0.0;
    for (std::size_t b = 1; b < starts.size(); ++b) {
      const double d = time - starts[b];
      if (std::abs(d) <= spec.transient_width)
        bump = std::max(bump, std::exp(-(d * d) / (2.0 * tsigma * tsigma)));
    }

    float* row = f.row(t);
    for (std::size_t d = 0; d < spec.dim; ++d) {
      double v = mean[d] + bump * transient[d];
      if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise.normal();
      row[d] = static_cast<float>(v);
    }
  }
  return song;
}

}  // namespace songseg
