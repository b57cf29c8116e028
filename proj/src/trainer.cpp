// SPDX-License-Identifier: Apache-2.0
#include "songseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "songseg/metrics.hpp"
#include "songseg/parallel.hpp"
#include "songseg/rng.hpp"
#include "songseg/targets.hpp"

namespace songseg {

void TrainConfig::validate() const {
  if (batch_size < 1) fail(Errc::config_error, "batch_size must be >= 1");
  if (warmup_steps < 0 || total_steps <= warmup_steps)
    fail(Errc::config_error, "need warmup_steps < total_steps");
  if (eval_every < 1) fail(Errc::config_error, "eval_every must be >= 1");
  if (patience < 1) fail(Errc::config_error, "patience must be >= 1");
  if (!(max_duration > 0.0)) fail(Errc::config_error, "max_duration must be positive");
  if (!(peak_lr > 0.0)) fail(Errc::config_error, "peak_lr must be positive");
  decode.validate();
}

double lr_at(int step, const TrainConfig& cfg) {
  if (step <= 0) return 0.0;
  if (step < cfg.warmup_steps)
    return cfg.peak_lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  if (step >= cfg.total_steps) return 0.0;
  const double progress = static_cast<double>(step - cfg.warmup_steps) /
                          static_cast<double>(cfg.total_steps - cfg.warmup_steps);
  return cfg.peak_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

namespace {

// Truncate a feature tensor to max_duration and to a multiple of the
// downsample factor; returns a view into the original storage.
CMatView truncated_view(const Mat& x, double frame_rate, const TrainConfig& tcfg, int factor) {
  std::size_t frames = x.rows();
  const auto cap = static_cast<std::size_t>(std::llround(tcfg.max_duration * frame_rate));
  frames = std::min(frames, cap);
  frames -= frames % static_cast<std::size_t>(factor);
  return CMatView{x.data(), frames, x.cols()};
}

Mat to_double(const FeatureTensor& f) {
  Mat x(f.frames, f.dim);
  for (std::size_t i = 0; i < f.data.size(); ++i) x.data()[i] = static_cast<double>(f.data[i]);
  return x;
}

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  int t = 0;

  explicit AdamState(const ModelParams& params) {
    m.reserve(params.tensors().size());
    v.reserve(params.tensors().size());
    for (const auto& p : params.tensors()) {
      m.emplace_back(p.size(), 0.0);
      v.emplace_back(p.size(), 0.0);
    }
  }

  void update(ModelParams& params, double lr, const TrainConfig& cfg) {
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
    for (std::size_t i = 0; i < params.tensors().size(); ++i) {
      auto& p = params.tensors()[i];
      auto& mi = m[i];
      auto& vi = v[i];
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double g = p.grad[k];
        mi[k] = cfg.adam_beta1 * mi[k] + (1.0 - cfg.adam_beta1) * g;
        vi[k] = cfg.adam_beta2 * vi[k] + (1.0 - cfg.adam_beta2) * g * g;
        const double mhat = mi[k] / bc1;
        const double vhat = vi[k] / bc2;
        p.value[k] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
      }
    }
  }
};

double selection_value(const ValidationPoint& v, SelectionMetric m) {
  switch (m) {
    case SelectionMetric::acc:   return v.acc;
    case SelectionMetric::hr05f: return v.hr05f;
    case SelectionMetric::hr3f:  return v.hr3f;
  }
  return v.acc;
}

ValidationPoint run_validation(const std::vector<TrackExample>& val_set, const ModelParams& params,
                               const TrainConfig& cfg) {
  std::vector<Annotation> est(val_set.size());
  parallel_for(val_set.size(), cfg.workers, [&](std::size_t i) {
    est[i] = infer(val_set[i].features, params, cfg.decode);
  });
  std::vector<EvalPair> pairs;
  pairs.reserve(val_set.size());
  for (std::size_t i = 0; i < val_set.size(); ++i)
    pairs.push_back(EvalPair{val_set[i].id, &val_set[i].annotation, &est[i]});
  const MetricReport report = evaluate_corpus(pairs);
  ValidationPoint v;
  v.hr05f = report.mean.hr05.f;
  v.hr3f = report.mean.hr3.f;
  v.acc = report.mean.acc;
  return v;
}

}  // namespace

FrameTargets targets_for_track(const TrackExample& track, const ModelConfig& cfg,
                               const TrainConfig& tcfg) {
  const Mat x = to_double(track.features);
  const CMatView view = truncated_view(x, track.features.frame_rate, tcfg, cfg.downsample_factor);
  const std::size_t frames_out = view.rows / static_cast<std::size_t>(cfg.downsample_factor);
  const FrameGrid grid =
      grid_for_frames(frames_out, track.features.frame_rate / cfg.downsample_factor);
  const Annotation ann = track.annotation.end > grid.duration + 1e-9
                             ? truncate_annotation(track.annotation, grid.duration)
                             : track.annotation;
  return make_targets(ann, grid, track.policy, tcfg.boundary_half_width);
}

LossBreakdown track_loss(const TrackExample& track, ModelParams& params, const TrainConfig& cfg,
                         bool with_grad, ForwardCache* workspace) {
  const ModelConfig& mcfg = params.config();
  const Mat x = to_double(track.features);
  const CMatView view = truncated_view(x, track.features.frame_rate, cfg, mcfg.downsample_factor);
  const FrameTargets tgt = targets_for_track(track, mcfg, cfg);

  ForwardCache local;
  ForwardCache& cache = workspace ? *workspace : local;
  const SourceId src = track.annotation.source;
  ForwardOutput out = forward(view, src, params, with_grad ? &cache : nullptr);
  OutputGrads grads;
  const LossBreakdown loss = total_loss(out, tgt, cfg.loss, with_grad ? &grads : nullptr);
  if (with_grad) backward(params, cache, grads);
  return loss;
}

TrainResult train(const std::vector<TrackExample>& train_set,
                  const std::vector<TrackExample>& val_set, const TrainConfig& cfg,
                  ModelParams initial_params, std::ostream* log) {
  cfg.validate();
  if (train_set.empty() || val_set.empty()) fail(Errc::empty_corpus, "need train and val tracks");

  TrainResult result;
  ModelParams params = std::move(initial_params);
  AdamState adam(params);
  const ModelConfig& mcfg = params.config();

  Rng shuffle_rng = Rng(cfg.seed).fork(1);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();  // forces an initial shuffle

  auto next_batch = [&](std::vector<std::size_t>& batch) {
    batch.clear();
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor >= order.size()) {
        for (std::size_t i = order.size(); i > 1; --i)
          std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.uniform_int(
                                     0, static_cast<int>(i) - 1))]);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }
  };

  double best_hr05 = -1.0, best_acc = -1.0, best_sel = -1.0;
  int stale = 0;
  result.best_params = params;
  result.stop_reason = "total_steps";

  // Per-element gradient buffers; summed in index order for determinism.
  std::vector<ModelParams> replicas;
  std::vector<ForwardCache> workspaces;

  std::vector<std::size_t> batch;
  for (int step = 1; step <= cfg.total_steps; ++step) {
    next_batch(batch);
    const double lr = lr_at(step, cfg);

    if (replicas.size() < batch.size()) {
      replicas.resize(batch.size(), ModelParams(mcfg));
      workspaces.resize(batch.size());
    }
    std::vector<LossBreakdown> losses(batch.size());
    parallel_for(batch.size(), cfg.workers, [&](std::size_t i) {
      ModelParams& rep = replicas[i];
      // Values track the live params; gradients start at zero.
      for (std::size_t t = 0; t < rep.tensors().size(); ++t)
        rep.tensors()[t].value = params.tensors()[t].value;
      rep.zero_grad();
      losses[i] = track_loss(train_set[batch[i]], rep, cfg, true, &workspaces[i]);
    });

    LossBreakdown mean;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const auto& l : losses) {
      mean.bce += l.bce * inv_b;
      mean.tv += l.tv * inv_b;
      mean.ce += l.ce * inv_b;
      mean.focal += l.focal * inv_b;
      mean.total += l.total * inv_b;
    }
    if (!std::isfinite(mean.total))
      fail(Errc::non_finite_loss, "non-finite loss at step " + std::to_string(step));

    params.zero_grad();
    for (std::size_t i = 0; i < batch.size(); ++i)
      for (std::size_t t = 0; t < params.tensors().size(); ++t) {
        auto& dst = params.tensors()[t].grad;
        const auto& src = replicas[i].tensors()[t].grad;
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k] * inv_b;
      }
    adam.update(params, lr, cfg);

    result.steps.push_back(StepLog{step, lr, mean});
    if (log)
      (*log) << "step=" << step << " lr=" << lr << " bce=" << mean.bce << " tv=" << mean.tv
             << " ce=" << mean.ce << " focal=" << mean.focal << " total=" << mean.total << "\n";

    if (step % cfg.eval_every == 0 || step == cfg.total_steps) {
      ValidationPoint v = run_validation(val_set, params, cfg);
      v.step = step;
      v.improved = v.hr05f > best_hr05 || v.acc > best_acc;
      best_hr05 = std::max(best_hr05, v.hr05f);
      best_acc = std::max(best_acc, v.acc);
      const double sel = selection_value(v, cfg.selection);
      if (sel > best_sel) {
        best_sel = sel;
        result.best_params = params;
        result.best_step = step;
        result.best_selection_value = sel;
      }
      result.validations.push_back(v);
      if (log)
        (*log) << "validation step=" << step << " hr05f=" << v.hr05f << " hr3f=" << v.hr3f
               << " acc=" << v.acc << " improved=" << (v.improved ? 1 : 0) << "\n";
      stale = v.improved ? 0 : stale + 1;
      if (stale >= cfg.patience) {
        result.stop_reason = "early_stopping";
        if (log) (*log) << "stop reason=early_stopping step=" << step << "\n";
        return result;
      }
    }
  }
  if (log) (*log) << "stop reason=total_steps step=" << cfg.total_steps << "\n";
  return result;
}

}  // namespace songseg
