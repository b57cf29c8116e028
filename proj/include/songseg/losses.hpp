// SPDX-License-Identifier: Apache-2.0
//
// Composite training objective: masked BCE on the smoothed boundary curve, a
// boundary-aware total-variation penalty on the boundary probabilities,
// masked cross-entropy on function classes, and softmax focal loss, combined
// as total = lambda*(bce + lambda_tv*tv) + (1-lambda)*(ce + lambda_focal*focal).
// Every term has an analytic gradient.
#pragma once

#include <span>

#include "songseg/mat.hpp"
#include "songseg/model.hpp"
#include "songseg/targets.hpp"

namespace songseg {

struct LossWeights {
  double lambda = 0.2;
  double lambda_tv = 0.05;
  double lambda_focal = 0.2;
  double tv_beta = 0.6;
  double tv_alpha = 0.1;
  double tv_region_threshold = 0.01;
  double focal_gamma = 2.0;
};

struct LossBreakdown {
  double bce = 0.0;
  double tv = 0.0;
  double ce = 0.0;
  double focal = 0.0;
  double total = 0.0;
};

// Mean over mask=1 frames of the stable-form binary cross entropy against
// soft targets in [0,1]. Returns 0 for an all-zero mask. If grad is non-empty
// it receives grad[i] += scale * dLoss/dlogit[i].
double bce_loss(std::span<const double> logits, std::span<const double> targets,
                std::span<const double> mask, std::span<double> grad = {}, double grad_scale = 1.0);

// Boundary-aware TV penalty on probabilities p (B x T rows): mean over
// B*(T-1) frame-to-frame differences of w * |dp|^beta, where w = tv_alpha
// inside a boundary region (either endpoint's target above the threshold)
// and 1 elsewhere. An optional 0/1 mask zeroes differences touching a
// masked-out frame. grad receives += scale * dLoss/dp.
double tv_loss(CMatView probs, CMatView boundary_targets, const LossWeights& w,
               CMatView mask = {}, MatView grad_probs = {}, double grad_scale = 1.0);

// Masked mean of -log softmax(logits)[class].
double ce_loss(CMatView logits, std::span<const int> classes, std::span<const double> mask,
               MatView grad = {}, double grad_scale = 1.0);

// Masked mean of -(1-p_c)^gamma * log p_c; gamma = 0 reduces to ce_loss.
double focal_loss(CMatView logits, std::span<const int> classes, std::span<const double> mask,
                  double gamma, MatView grad = {}, double grad_scale = 1.0);

// Full objective on one track. When grads is non-null it is resized and
// filled (not accumulated) with dTotal/dlogits for both heads.
LossBreakdown total_loss(const ForwardOutput& out, const FrameTargets& tgt, const LossWeights& w,
                         OutputGrads* grads = nullptr);

}  // namespace songseg
