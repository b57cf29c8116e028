// SPDX-License-Identifier: Apache-2.0
//
// The learnable model: residual downsampling (depthwise-pointwise conv branch
// plus average-pool-pointwise branch), additive source embedding, a pre-norm
// transformer encoder with rotary position embedding, and two linear heads.
// Forward and exact reverse-mode gradients are implemented by hand; every
// parameter array is addressable by name so finite-difference sweeps can
// cover the full registry.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "songseg/annotation.hpp"
#include "songseg/error.hpp"
#include "songseg/feature_io.hpp"
#include "songseg/mat.hpp"

namespace songseg {

struct ModelConfig {
  std::size_t input_dim = 64;
  std::size_t d_model = 64;
  int n_layers = 4;
  int n_heads = 4;
  int n_sources = 4;
  int n_classes = kNumClasses;
  int downsample_factor = 3;
  int dw_kernel = 3;
  int ffn_mult = 4;
  double rope_base = 10000.0;

  std::size_t ffn_dim() const { return d_model * static_cast<std::size_t>(ffn_mult); }
  std::size_t head_dim() const { return d_model / static_cast<std::size_t>(n_heads); }
  void validate() const;
};

struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t size() const { return value.size(); }
  MatView mat() { return MatView{value.data(), shape[0], shape.size() > 1 ? shape[1] : 1}; }
  CMatView mat() const { return CMatView{value.data(), shape[0], shape.size() > 1 ? shape[1] : 1}; }
  MatView grad_mat() { return MatView{grad.data(), shape[0], shape.size() > 1 ? shape[1] : 1}; }
};

// All learnable arrays, enumerated exactly once each.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  std::vector<ParamTensor>& tensors() { return tensors_; }
  const std::vector<ParamTensor>& tensors() const { return tensors_; }

  ParamTensor& find(std::string_view name);
  const ParamTensor& find(std::string_view name) const;

  void zero_grad();
  // Scaled-uniform init per array; layer norms start at identity.
  void init_random(uint64_t seed);
  std::size_t total_parameters() const;

 private:
  ModelConfig cfg_;
  std::vector<ParamTensor> tensors_;
};

struct ForwardOutput {
  std::vector<double> boundary_logits;  // frames_out
  Mat function_logits;                  // frames_out x n_classes
  std::size_t frames_out = 0;
};

struct OutputGrads {
  std::vector<double> d_boundary;
  Mat d_function;
};

// Activations captured during forward for the backward pass.
struct LayerCache {
  Mat ln1_hat;   // normalized pre-attention input
  std::vector<double> ln1_inv_std;
  Mat ln1_out;
  Mat q_rot, k_rot, v;          // frames x d_model, q/k post-rotation
  std::vector<Mat> attn;        // per head, frames x frames softmax weights
  Mat context;                  // concatenated head outputs
  Mat h_mid;                    // input + attention residual
  Mat ln2_hat;
  std::vector<double> ln2_inv_std;
  Mat ln2_out;
  Mat ffn_pre;                  // frames x ffn_dim, pre-activation
  Mat ffn_act;
};

// Scratch matrices shared across layers; reusing one cache object across
// calls keeps the big attention buffers allocated.
struct WorkBuffers {
  Mat qh, kh, vh, scores, ctxh;
  Mat d_act, d_ln2_out, d_mid, d_ctx, d_qrot, d_krot, d_v;
  Mat d_a, d_s, d_qh, d_kh, d_vh, d_ctxh;
  Mat h, h_next;
};

struct ForwardCache {
  Mat x;          // model input, frames_in x input_dim
  SourceId src = 0;
  Mat dw_out;     // depthwise branch before pointwise, frames_out x input_dim
  Mat pooled;     // pooling branch before pointwise
  Mat h0;         // downsampled + source embedding (encoder input)
  std::vector<LayerCache> layers;
  Mat encoded;    // encoder output feeding the heads
  WorkBuffers work;
};

// Adds the source embedding row to every frame vector in place.
void add_source(MatView h, SourceId src, const ModelParams& params);

ForwardOutput forward(CMatView x, SourceId src, const ModelParams& params,
                      ForwardCache* cache = nullptr);
ForwardOutput forward(const FeatureTensor& x, SourceId src, const ModelParams& params,
                      ForwardCache* cache = nullptr);

// Accumulates dLoss/dParam into each tensor's grad buffer. The cache is the
// one filled by forward; its scratch space is reused.
void backward(ModelParams& params, ForwardCache& cache, const OutputGrads& upstream);

// Rotary embedding of one head-sized row at `position`; dims are paired
// (2i, 2i+1) with angle position * base^(-2i/len).
void rope_rotate_head(std::span<double> v, double position, double base, bool inverse = false);

// Scaled dot-product score of two head-sized rows placed at absolute
// positions qi / kj (hook for the relative-position property tests).
double rope_score(std::span<const double> q, std::span<const double> k, double qi, double kj,
                  double base);

}  // namespace songseg
