// SPDX-License-Identifier: Apache-2.0
//
// Optimization loop: shuffled batching with 420 s truncation, an adaptive
// moment optimizer on a warmup+cosine schedule, periodic validation with
// HR.5F/ACC early stopping, and best-checkpoint retention.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "songseg/annotation.hpp"
#include "songseg/decode.hpp"
#include "songseg/feature_io.hpp"
#include "songseg/losses.hpp"
#include "songseg/model.hpp"

namespace songseg {

enum class SelectionMetric { acc, hr05f, hr3f };

struct TrainConfig {
  int batch_size = 4;
  double peak_lr = 1e-4;
  int warmup_steps = 300;
  int total_steps = 2000;
  int eval_every = 100;
  int patience = 3;  // consecutive validations without improvement in either metric
  uint64_t seed = 17;
  double max_duration = 420.0;  // seconds; longer tracks are truncated
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  SelectionMetric selection = SelectionMetric::acc;
  int workers = 0;  // 0 = hardware concurrency
  int boundary_half_width = 10;
  LossWeights loss;
  DecodeConfig decode;  // validation inference settings

  void validate() const;
};

// Linear ramp to peak over warmup_steps, then cosine decay to zero at
// total_steps, zero beyond.
double lr_at(int step, const TrainConfig& cfg);

struct TrackExample {
  std::string id;
  FeatureTensor features;
  Annotation annotation;
  MaskPolicy policy = MaskPolicy::full;
};

struct StepLog {
  int step = 0;
  double lr = 0.0;
  LossBreakdown loss;
};

struct ValidationPoint {
  int step = 0;
  double hr05f = 0.0;
  double hr3f = 0.0;
  double acc = 0.0;
  bool improved = false;
};

struct TrainResult {
  ModelParams best_params;
  int best_step = 0;
  double best_selection_value = 0.0;
  std::vector<StepLog> steps;
  std::vector<ValidationPoint> validations;
  std::string stop_reason;  // "total_steps" or "early_stopping"
};

// Targets for one track on the model's downsampled grid, truncated to
// max_duration. Exposed for the loss-equivalence tests.
FrameTargets targets_for_track(const TrackExample& track, const ModelConfig& cfg,
                               const TrainConfig& tcfg);

// Loss (and optionally parameter gradients) of a single track. A caller-held
// workspace avoids reallocating activation buffers across calls.
LossBreakdown track_loss(const TrackExample& track, ModelParams& params, const TrainConfig& cfg,
                         bool with_grad, ForwardCache* workspace = nullptr);

TrainResult train(const std::vector<TrackExample>& train_set,
                  const std::vector<TrackExample>& val_set, const TrainConfig& cfg,
                  ModelParams initial_params, std::ostream* log = nullptr);

}  // namespace songseg
