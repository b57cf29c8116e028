// SPDX-License-Identifier: Apache-2.0
#include "songseg/decode.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace songseg {

void DecodeConfig::validate() const {
  if (peak_window < 1) fail(Errc::config_error, "peak_window must be >= 1");
  if (min_gap < 1) fail(Errc::config_error, "min_gap must be >= 1");
  if (prob_threshold < 0.0 || prob_threshold > 1.0)
    fail(Errc::config_error, "prob_threshold must be in [0,1]");
}

std::vector<double> pick_boundaries(std::span<const double> boundary_logits, const FrameGrid& grid,
                                    const DecodeConfig& cfg) {
  cfg.validate();
  const std::size_t n = boundary_logits.size();
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = 1.0 / (1.0 + std::exp(-boundary_logits[i]));

  // Local maxima over a +-peak_window neighborhood. A plateau keeps only its
  // first frame: strictly greater than the left side, >= on the right.
  std::vector<std::size_t> candidates;
  for (std::size_t t = 0; t < n; ++t) {
    if (p[t] < cfg.prob_threshold) continue;
    bool is_peak = true;
    for (int k = 1; k <= cfg.peak_window && is_peak; ++k) {
      if (t >= static_cast<std::size_t>(k) && p[t - static_cast<std::size_t>(k)] >= p[t]) is_peak = false;
      if (t + static_cast<std::size_t>(k) < n && p[t + static_cast<std::size_t>(k)] > p[t]) is_peak = false;
    }
    if (is_peak) candidates.push_back(t);
  }

  // Greedy suppression in descending probability; earlier frame wins ties.
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (p[candidates[a]] != p[candidates[b]]) return p[candidates[a]] > p[candidates[b]];
    return candidates[a] < candidates[b];
  });
  std::vector<std::size_t> accepted;
  for (std::size_t oi : order) {
    const std::size_t t = candidates[oi];
    bool ok = true;
    for (std::size_t a : accepted) {
      const std::size_t gap = t > a ? t - a : a - t;
      if (gap < static_cast<std::size_t>(cfg.min_gap)) {
        ok = false;
        break;
      }
    }
    if (ok) accepted.push_back(t);
  }
  std::sort(accepted.begin(), accepted.end());

  std::vector<double> times;
  times.push_back(0.0);
  for (std::size_t t : accepted) {
    const double sec = static_cast<double>(t) / grid.frame_rate;
    if (sec > 1e-9 && sec < grid.duration - 1e-9) times.push_back(sec);
  }
  times.push_back(grid.duration);
  return times;
}

Annotation label_segments(CMatView function_logits, std::span<const double> boundaries,
                          const FrameGrid& grid, SourceId source) {
  const std::size_t frames = function_logits.rows;
  const std::size_t classes = function_logits.cols;
  if (boundaries.size() < 2) fail(Errc::length_mismatch, "need at least [0, duration] boundaries");

  // Softmax per frame once.
  Mat probs(frames, classes);
  std::vector<double> tmp(classes);
  for (std::size_t i = 0; i < frames; ++i) {
    const double* row = function_logits.row(i);
    double mx = row[0];
    for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < classes; ++j) {
      tmp[j] = std::exp(row[j] - mx);
      sum += tmp[j];
    }
    for (std::size_t j = 0; j < classes; ++j) probs(i, j) = tmp[j] / sum;
  }

  // Frame ranges per span; empty spans merge into the following one.
  Annotation ann;
  ann.source = source;
  ann.end = boundaries.back();
  double span_start = boundaries.front();
  long first = frame_at_or_after(span_start, grid.frame_rate);
  for (std::size_t s = 0; s + 1 < boundaries.size(); ++s) {
    const long last = s + 2 < boundaries.size()
                          ? frame_at_or_after(boundaries[s + 1], grid.frame_rate)
                          : static_cast<long>(frames);
    if (last <= first) continue;  // zero-frame span, absorb into the next
    std::vector<double> avg(classes, 0.0);
    for (long t = std::max<long>(first, 0); t < std::min<long>(last, static_cast<long>(frames)); ++t)
      for (std::size_t j = 0; j < classes; ++j) avg[j] += probs(static_cast<std::size_t>(t), j);
    std::size_t best = 0;
    for (std::size_t j = 1; j < classes; ++j)
      if (avg[j] > avg[best]) best = j;  // ties keep the lowest index
    ann.segments.push_back(Segment{span_start, static_cast<Label>(best)});
    span_start = s + 2 < boundaries.size() ? boundaries[s + 1] : ann.end;
    first = last;
  }
  ann.validate();
  return ann;
}

Annotation infer(const FeatureTensor& x, const ModelParams& params, const DecodeConfig& cfg) {
  cfg.validate();
  ForwardOutput out = forward(x, cfg.source, params);
  FrameGrid grid;
  grid.frame_rate = x.frame_rate / params.config().downsample_factor;
  grid.num_frames = out.frames_out;
  grid.duration = x.duration();
  auto boundaries = pick_boundaries(out.boundary_logits, grid, cfg);
  return label_segments(out.function_logits, boundaries, grid, cfg.source);
}

}  // namespace songseg
