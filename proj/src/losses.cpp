// SPDX-License-Identifier: Apache-2.0
#include "songseg/losses.hpp"

#include <algorithm>
#include <cmath>

namespace songseg {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::size_t mask_count(std::span<const double> mask) {
  std::size_t n = 0;
  for (double m : mask)
    if (m != 0.0) ++n;
  return n;
}

}  // namespace

double bce_loss(std::span<const double> logits, std::span<const double> targets,
                std::span<const double> mask, std::span<double> grad, double grad_scale) {
  const std::size_t n = logits.size();
  if (targets.size() != n || mask.size() != n || (!grad.empty() && grad.size() != n))
    fail(Errc::length_mismatch, "bce_loss array lengths differ");
  const std::size_t count = mask_count(mask);
  if (count == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(count);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] == 0.0) continue;
    const double z = logits[i], y = targets[i];
    loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    if (!grad.empty()) grad[i] += grad_scale * inv * (sigmoid(z) - y);
  }
  return loss * inv;
}

double tv_loss(CMatView probs, CMatView boundary_targets, const LossWeights& w, CMatView mask,
               MatView grad_probs, double grad_scale) {
  const std::size_t rows = probs.rows, cols = probs.cols;
  if (cols < 2) fail(Errc::too_short, "tv_loss needs at least 2 frames");
  if (boundary_targets.rows != rows || boundary_targets.cols != cols)
    fail(Errc::length_mismatch, "tv_loss target shape differs");
  if (!mask.empty() && (mask.rows != rows || mask.cols != cols))
    fail(Errc::length_mismatch, "tv_loss mask shape differs");
  if (!grad_probs.empty() && (grad_probs.rows != rows || grad_probs.cols != cols))
    fail(Errc::length_mismatch, "tv_loss grad shape differs");

  const double norm = 1.0 / (static_cast<double>(rows) * static_cast<double>(cols - 1));
  double loss = 0.0;
  for (std::size_t b = 0; b < rows; ++b) {
    const double* p = probs.row(b);
    const double* tgt = boundary_targets.row(b);
    for (std::size_t t = 0; t + 1 < cols; ++t) {
      double weight =
          (tgt[t] > w.tv_region_threshold || tgt[t + 1] > w.tv_region_threshold) ? w.tv_alpha : 1.0;
      if (!mask.empty() && (mask(b, t) == 0.0 || mask(b, t + 1) == 0.0)) weight = 0.0;
      if (weight == 0.0) continue;
      const double diff = p[t + 1] - p[t];
      const double mag = std::abs(diff);
      loss += weight * std::pow(mag, w.tv_beta);
      if (!grad_probs.empty() && mag > 0.0) {
        // d|diff|^beta = beta*|diff|^(beta-1)*sign(diff); zero at a tie.
        const double g = grad_scale * norm * weight * w.tv_beta * std::pow(mag, w.tv_beta - 1.0) *
                         (diff > 0.0 ? 1.0 : -1.0);
        grad_probs(b, t + 1) += g;
        grad_probs(b, t) -= g;
      }
    }
  }
  return loss * norm;
}

namespace {

// Shared CE/focal core; gamma < 0 means plain cross-entropy.
double class_loss(CMatView logits, std::span<const int> classes, std::span<const double> mask,
                  double gamma, MatView grad, double grad_scale) {
  const std::size_t n = logits.rows, c = logits.cols;
  if (classes.size() != n || mask.size() != n)
    fail(Errc::length_mismatch, "class loss array lengths differ");
  if (!grad.empty() && (grad.rows != n || grad.cols != c))
    fail(Errc::length_mismatch, "class loss grad shape differs");
  const std::size_t count = mask_count(mask);
  if (count == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(count);

  std::vector<double> p(c);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] == 0.0) continue;
    const int cls = classes[i];
    if (cls < 0 || static_cast<std::size_t>(cls) >= c)
      fail(Errc::bad_class_index, "class " + std::to_string(cls));
    const double* row = logits.row(i);
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      p[j] = std::exp(row[j] - mx);
      sum += p[j];
    }
    const double inv_sum = 1.0 / sum;
    for (std::size_t j = 0; j < c; ++j) p[j] *= inv_sum;
    const double pc = std::max(p[static_cast<std::size_t>(cls)], 1e-300);
    const double log_pc = std::log(pc);

    if (gamma < 0.0) {
      loss += -log_pc;
      if (!grad.empty()) {
        double* grow = grad.row(i);
        for (std::size_t j = 0; j < c; ++j)
          grow[j] += grad_scale * inv * (p[j] - (static_cast<int>(j) == cls ? 1.0 : 0.0));
      }
    } else {
      const double one_minus = 1.0 - pc;
      const double pow_g = std::pow(one_minus, gamma);
      loss += -pow_g * log_pc;
      if (!grad.empty()) {
        // dL/dz_j = A * (delta_jc - p_j),
        // A = gamma*(1-pc)^(gamma-1)*log(pc)*pc - (1-pc)^gamma
        const double pow_gm1 = gamma == 0.0 ? 0.0 : std::pow(one_minus, gamma - 1.0);
        const double a = gamma * pow_gm1 * log_pc * pc - pow_g;
        double* grow = grad.row(i);
        for (std::size_t j = 0; j < c; ++j)
          grow[j] += grad_scale * inv * a * ((static_cast<int>(j) == cls ? 1.0 : 0.0) - p[j]);
      }
    }
  }
  return loss * inv;
}

}  // namespace

double ce_loss(CMatView logits, std::span<const int> classes, std::span<const double> mask,
               MatView grad, double grad_scale) {
  return class_loss(logits, classes, mask, -1.0, grad, grad_scale);
}

double focal_loss(CMatView logits, std::span<const int> classes, std::span<const double> mask,
                  double gamma, MatView grad, double grad_scale) {
  if (gamma < 0.0) fail(Errc::config_error, "focal gamma must be >= 0");
  return class_loss(logits, classes, mask, gamma, grad, grad_scale);
}

LossBreakdown total_loss(const ForwardOutput& out, const FrameTargets& tgt, const LossWeights& w,
                         OutputGrads* grads) {
  const std::size_t n = out.frames_out;
  if (tgt.boundary.size() != n || tgt.function.size() != n || tgt.boundary_mask.size() != n ||
      tgt.function_mask.size() != n || out.boundary_logits.size() != n ||
      out.function_logits.rows() != n)
    fail(Errc::length_mismatch, "targets do not match the forward output length");

  if (grads) {
    grads->d_boundary.assign(n, 0.0);
    grads->d_function.resize(n, out.function_logits.cols());
    grads->d_function.fill(0.0);
  }
  std::span<double> d_boundary =
      grads ? std::span<double>(grads->d_boundary) : std::span<double>();
  MatView d_function = grads ? grads->d_function.view() : MatView{};

  LossBreakdown r;
  r.bce = bce_loss(out.boundary_logits, tgt.boundary, tgt.boundary_mask, d_boundary, w.lambda);

  // TV runs on probabilities; chain through the sigmoid into the logits.
  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) probs[i] = sigmoid(out.boundary_logits[i]);
  CMatView probs_view{probs.data(), 1, n};
  CMatView tgt_view{tgt.boundary.data(), 1, n};
  CMatView mask_view{tgt.boundary_mask.data(), 1, n};
  if (n >= 2) {
    std::vector<double> d_probs;
    MatView d_probs_view{};
    if (grads) {
      d_probs.assign(n, 0.0);
      d_probs_view = MatView{d_probs.data(), 1, n};
    }
    r.tv = tv_loss(probs_view, tgt_view, w, mask_view, d_probs_view, 1.0);
    if (grads)
      for (std::size_t i = 0; i < n; ++i)
        d_boundary[i] += w.lambda * w.lambda_tv * d_probs[i] * probs[i] * (1.0 - probs[i]);
  }

  r.ce = ce_loss(out.function_logits, tgt.function, tgt.function_mask, d_function, 1.0 - w.lambda);
  r.focal = focal_loss(out.function_logits, tgt.function, tgt.function_mask, w.focal_gamma,
                       d_function, (1.0 - w.lambda) * w.lambda_focal);

  r.total = w.lambda * (r.bce + w.lambda_tv * r.tv) + (1.0 - w.lambda) * (r.ce + w.lambda_focal * r.focal);
  return r;
}

}  // namespace songseg
