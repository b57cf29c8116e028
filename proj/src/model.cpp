// SPDX-License-Identifier: Apache-2.0
#include "songseg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "songseg/fastmath.hpp"
#include "songseg/rng.hpp"

namespace songseg {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu(double z) { return 0.5 * z * (1.0 + std::erf(z * kInvSqrt2)); }

double gelu_grad(double z) {
  return 0.5 * (1.0 + std::erf(z * kInvSqrt2)) + z * kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

// y = x * W + b, rows of b broadcast.
void linear(CMatView x, CMatView w, std::span<const double> b, MatView out) {
  matmul(x, w, out);
  for (std::size_t i = 0; i < out.rows; ++i) {
    double* row = out.row(i);
    for (std::size_t j = 0; j < out.cols; ++j) row[j] += b[j];
  }
}

void add_colsum(CMatView d, std::span<double> acc) {
  for (std::size_t i = 0; i < d.rows; ++i) {
    const double* row = d.row(i);
    for (std::size_t j = 0; j < d.cols; ++j) acc[j] += row[j];
  }
}

void layer_norm(CMatView x, std::span<const double> gamma, std::span<const double> beta, Mat& hat,
                std::vector<double>& inv_std, Mat& out) {
  const std::size_t n = x.rows, m = x.cols;
  hat.resize(n, m);
  out.resize(n, m);
  inv_std.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.row(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < m; ++j) mean += row[j];
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = row[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(m);
    const double is = 1.0 / std::sqrt(var + kLnEps);
    inv_std[i] = is;
    double* hrow = hat.row(i);
    double* orow = out.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      hrow[j] = (row[j] - mean) * is;
      orow[j] = gamma[j] * hrow[j] + beta[j];
    }
  }
}

// dx for y = gamma * hat + beta given dy; also accumulates dgamma/dbeta.
void layer_norm_backward(CMatView dy, const Mat& hat, const std::vector<double>& inv_std,
                         std::span<const double> gamma, std::span<double> dgamma,
                         std::span<double> dbeta, MatView dx, bool accumulate_dx) {
  const std::size_t n = dy.rows, m = dy.cols;
  for (std::size_t i = 0; i < n; ++i) {
    const double* dyr = dy.row(i);
    const double* hr = hat.row(i);
    double g_mean = 0.0, gh_mean = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double g = dyr[j] * gamma[j];
      g_mean += g;
      gh_mean += g * hr[j];
      dgamma[j] += dyr[j] * hr[j];
      dbeta[j] += dyr[j];
    }
    g_mean /= static_cast<double>(m);
    gh_mean /= static_cast<double>(m);
    double* dxr = dx.row(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double g = dyr[j] * gamma[j];
      const double v = inv_std[i] * (g - g_mean - hr[j] * gh_mean);
      if (accumulate_dx)
        dxr[j] += v;
      else
        dxr[j] = v;
    }
  }
}

void copy_head(CMatView full, std::size_t head, std::size_t dh, Mat& out) {
  out.resize(full.rows, dh);
  for (std::size_t i = 0; i < full.rows; ++i)
    std::memcpy(out.row(i), full.row(i) + head * dh, dh * sizeof(double));
}

void add_head_back(CMatView part, std::size_t head, std::size_t dh, MatView full) {
  for (std::size_t i = 0; i < part.rows; ++i) {
    double* dst = full.row(i) + head * dh;
    const double* src = part.row(i);
    for (std::size_t j = 0; j < dh; ++j) dst[j] += src[j];
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim < 1 || d_model < 1) fail(Errc::config_error, "input_dim and d_model must be >= 1");
  if (n_heads < 1 || d_model % (2 * static_cast<std::size_t>(n_heads)) != 0)
    fail(Errc::config_error, "d_model must be divisible by 2*n_heads");
  if (n_layers < 1) fail(Errc::config_error, "n_layers must be >= 1");
  if (downsample_factor < 1) fail(Errc::config_error, "downsample_factor must be >= 1");
  if (dw_kernel < 1) fail(Errc::config_error, "dw_kernel must be >= 1");
  if (ffn_mult < 1) fail(Errc::config_error, "ffn_mult must be >= 1");
  if (n_sources < 1) fail(Errc::config_error, "n_sources must be >= 1");
  if (n_classes < 2) fail(Errc::config_error, "n_classes must be >= 2");
}

ModelParams::ModelParams(const ModelConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  const std::size_t D = cfg.input_dim, M = cfg.d_model, K = static_cast<std::size_t>(cfg.dw_kernel);
  const std::size_t F = cfg.ffn_dim(), C = static_cast<std::size_t>(cfg.n_classes);
  const std::size_t S = static_cast<std::size_t>(cfg.n_sources);

  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    tensors_.push_back(ParamTensor{std::move(name), std::move(shape), std::vector<double>(n, 0.0),
                                   std::vector<double>(n, 0.0)});
  };

  add("downsample.dw_kernel", {D, K});
  add("downsample.pw_conv.weight", {D, M});
  add("downsample.pw_conv.bias", {M});
  add("downsample.pw_pool.weight", {D, M});
  add("downsample.pw_pool.bias", {M});
  add("source_embedding", {S, M});
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    add(p + "ln1.gamma", {M});
    add(p + "ln1.beta", {M});
    add(p + "attn.wq", {M, M});
    add(p + "attn.bq", {M});
    add(p + "attn.wk", {M, M});
    add(p + "attn.bk", {M});
    add(p + "attn.wv", {M, M});
    add(p + "attn.bv", {M});
    add(p + "attn.wo", {M, M});
    add(p + "attn.bo", {M});
    add(p + "ln2.gamma", {M});
    add(p + "ln2.beta", {M});
    add(p + "ffn.w1", {M, F});
    add(p + "ffn.b1", {F});
    add(p + "ffn.w2", {F, M});
    add(p + "ffn.b2", {M});
  }
  add("head.boundary.weight", {M, 1});
  add("head.boundary.bias", {1});
  add("head.function.weight", {M, C});
  add("head.function.bias", {C});
}

ParamTensor& ModelParams::find(std::string_view name) {
  for (auto& t : tensors_)
    if (t.name == name) return t;
  fail(Errc::config_error, "unknown parameter " + std::string(name));
}

const ParamTensor& ModelParams::find(std::string_view name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return t;
  fail(Errc::config_error, "unknown parameter " + std::string(name));
}

void ModelParams::zero_grad() {
  for (auto& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

void ModelParams::init_random(uint64_t seed) {
  Rng root(seed);
  for (std::size_t idx = 0; idx < tensors_.size(); ++idx) {
    auto& t = tensors_[idx];
    const bool is_gamma = t.name.ends_with("gamma");
    const bool is_bias_like =
        t.name.ends_with("beta") || t.name.ends_with("bias") || t.name.ends_with(".b1") ||
        t.name.ends_with(".b2") || t.name.ends_with(".bq") || t.name.ends_with(".bk") ||
        t.name.ends_with(".bv") || t.name.ends_with(".bo");
    if (is_gamma) {
      std::fill(t.value.begin(), t.value.end(), 1.0);
      continue;
    }
    if (is_bias_like) {
      std::fill(t.value.begin(), t.value.end(), 0.0);
      continue;
    }
    const std::size_t fan_in = t.shape[0];
    const std::size_t fan_out = t.shape.size() > 1 ? t.shape[1] : 1;
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Rng rng = root.fork(idx);
    for (auto& v : t.value) v = rng.uniform(-s, s);
  }
}

std::size_t ModelParams::total_parameters() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

void rope_rotate_head(std::span<double> v, double position, double base, bool inverse) {
  const std::size_t len = v.size();
  for (std::size_t i = 0; 2 * i + 1 < len; ++i) {
    const double theta = std::pow(base, -(2.0 * static_cast<double>(i)) / static_cast<double>(len));
    const double angle = position * theta;
    const double c = std::cos(angle);
    double s = std::sin(angle);
    if (inverse) s = -s;
    const double a = v[2 * i], b = v[2 * i + 1];
    v[2 * i] = a * c - b * s;
    v[2 * i + 1] = a * s + b * c;
  }
}

double rope_score(std::span<const double> q, std::span<const double> k, double qi, double kj,
                  double base) {
  std::vector<double> qr(q.begin(), q.end());
  std::vector<double> kr(k.begin(), k.end());
  rope_rotate_head(qr, qi, base);
  rope_rotate_head(kr, kj, base);
  double dot = 0.0;
  for (std::size_t i = 0; i < qr.size(); ++i) dot += qr[i] * kr[i];
  return dot / std::sqrt(static_cast<double>(q.size()));
}

namespace {

// Rotation angles are shared across heads, so cos/sin are tabulated once per
// call instead of evaluating pow per pair per frame.
void rope_rotate_rows(Mat& m, const ModelConfig& cfg, bool inverse) {
  const std::size_t dh = cfg.head_dim();
  const std::size_t pairs = dh / 2;
  const std::size_t frames = m.rows();
  std::vector<double> theta(pairs);
  for (std::size_t i = 0; i < pairs; ++i)
    theta[i] = std::pow(cfg.rope_base, -(2.0 * static_cast<double>(i)) / static_cast<double>(dh));
  std::vector<double> cos_t(frames * pairs), sin_t(frames * pairs);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < pairs; ++i) {
      const double angle = static_cast<double>(t) * theta[i];
      cos_t[t * pairs + i] = std::cos(angle);
      sin_t[t * pairs + i] = inverse ? -std::sin(angle) : std::sin(angle);
    }
  }
  for (std::size_t t = 0; t < frames; ++t) {
    const double* ct = cos_t.data() + t * pairs;
    const double* st = sin_t.data() + t * pairs;
    double* row = m.row(t);
    for (int h = 0; h < cfg.n_heads; ++h) {
      double* v = row + static_cast<std::size_t>(h) * dh;
      for (std::size_t i = 0; i < pairs; ++i) {
        const double a = v[2 * i], b = v[2 * i + 1];
        v[2 * i] = a * ct[i] - b * st[i];
        v[2 * i + 1] = a * st[i] + b * ct[i];
      }
    }
  }
}

void downsample_forward(const ModelParams& params, ForwardCache& c) {
  const ModelConfig& cfg = params.config();
  const std::size_t factor = static_cast<std::size_t>(cfg.downsample_factor);
  const std::size_t frames_in = c.x.rows();
  const std::size_t frames_out = frames_in / factor;
  const std::size_t D = cfg.input_dim;
  const int K = cfg.dw_kernel;
  const long center_off = (static_cast<long>(factor) - 1) / 2;
  const long k_off = (static_cast<long>(K) - 1) / 2;

  const auto& kernel = params.find("downsample.dw_kernel");
  c.dw_out.resize(frames_out, D);
  c.pooled.resize(frames_out, D);
  for (std::size_t tau = 0; tau < frames_out; ++tau) {
    double* dw_row = c.dw_out.row(tau);
    double* pool_row = c.pooled.row(tau);
    const long center = static_cast<long>(tau * factor) + center_off;
    for (std::size_t d = 0; d < D; ++d) {
      double acc = 0.0;
      for (int j = 0; j < K; ++j) {
        const long idx = center + j - k_off;
        if (idx < 0 || idx >= static_cast<long>(frames_in)) continue;  // zero pad
        acc += kernel.value[d * static_cast<std::size_t>(K) + static_cast<std::size_t>(j)] *
               c.x(static_cast<std::size_t>(idx), d);
      }
      dw_row[d] = acc;
      double pool = 0.0;
      for (std::size_t u = 0; u < factor; ++u) pool += c.x(tau * factor + u, d);
      pool_row[d] = pool / static_cast<double>(factor);
    }
  }

  c.h0.resize(frames_out, cfg.d_model);
  linear(c.dw_out, params.find("downsample.pw_conv.weight").mat(),
         params.find("downsample.pw_conv.bias").value, c.h0);
  Mat branch_b(frames_out, cfg.d_model);
  linear(c.pooled, params.find("downsample.pw_pool.weight").mat(),
         params.find("downsample.pw_pool.bias").value, branch_b);
  for (std::size_t i = 0; i < c.h0.size(); ++i) c.h0.data()[i] += branch_b.data()[i];
}

void downsample_backward(ModelParams& params, const ForwardCache& c, CMatView d_h0) {
  const ModelConfig& cfg = params.config();
  const std::size_t factor = static_cast<std::size_t>(cfg.downsample_factor);
  const std::size_t frames_in = c.x.rows();
  const std::size_t frames_out = d_h0.rows;
  const std::size_t D = cfg.input_dim;
  const int K = cfg.dw_kernel;
  const long center_off = (static_cast<long>(factor) - 1) / 2;
  const long k_off = (static_cast<long>(K) - 1) / 2;

  auto& wa = params.find("downsample.pw_conv.weight");
  auto& ba = params.find("downsample.pw_conv.bias");
  auto& wb = params.find("downsample.pw_pool.weight");
  auto& bb = params.find("downsample.pw_pool.bias");
  auto& kernel = params.find("downsample.dw_kernel");

  matmul_tn(c.dw_out, d_h0, wa.grad_mat(), /*accumulate=*/true);
  matmul_tn(c.pooled, d_h0, wb.grad_mat(), /*accumulate=*/true);
  add_colsum(d_h0, ba.grad);
  add_colsum(d_h0, bb.grad);

  Mat d_dw(frames_out, D);
  matmul_nt(d_h0, wa.mat(), d_dw);
  for (std::size_t tau = 0; tau < frames_out; ++tau) {
    const long center = static_cast<long>(tau * factor) + center_off;
    const double* drow = d_dw.row(tau);
    for (std::size_t d = 0; d < D; ++d) {
      for (int j = 0; j < K; ++j) {
        const long idx = center + j - k_off;
        if (idx < 0 || idx >= static_cast<long>(frames_in)) continue;
        kernel.grad[d * static_cast<std::size_t>(K) + static_cast<std::size_t>(j)] +=
            drow[d] * c.x(static_cast<std::size_t>(idx), d);
      }
    }
  }
}

void encoder_layer_forward(const ModelParams& params, int layer, const Mat& h_in, LayerCache& lc,
                           WorkBuffers& work, Mat& h_out) {
  const ModelConfig& cfg = params.config();
  const std::size_t frames = h_in.rows();
  const std::size_t M = cfg.d_model;
  const std::size_t dh = cfg.head_dim();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::string p = "layers." + std::to_string(layer) + ".";

  layer_norm(h_in, params.find(p + "ln1.gamma").value, params.find(p + "ln1.beta").value, lc.ln1_hat,
             lc.ln1_inv_std, lc.ln1_out);

  lc.q_rot.resize(frames, M);
  lc.k_rot.resize(frames, M);
  lc.v.resize(frames, M);
  linear(lc.ln1_out, params.find(p + "attn.wq").mat(), params.find(p + "attn.bq").value, lc.q_rot);
  linear(lc.ln1_out, params.find(p + "attn.wk").mat(), params.find(p + "attn.bk").value, lc.k_rot);
  linear(lc.ln1_out, params.find(p + "attn.wv").mat(), params.find(p + "attn.bv").value, lc.v);
  rope_rotate_rows(lc.q_rot, cfg, false);
  rope_rotate_rows(lc.k_rot, cfg, false);

  lc.attn.resize(static_cast<std::size_t>(cfg.n_heads));
  lc.context.resize(frames, M);
  Mat& qh = work.qh;
  Mat& kh = work.kh;
  Mat& vh = work.vh;
  Mat& scores = work.scores;
  Mat& ctxh = work.ctxh;
  for (int h = 0; h < cfg.n_heads; ++h) {
    copy_head(lc.q_rot, static_cast<std::size_t>(h), dh, qh);
    copy_head(lc.k_rot, static_cast<std::size_t>(h), dh, kh);
    copy_head(lc.v, static_cast<std::size_t>(h), dh, vh);
    // fold the 1/sqrt(dh) score scale into q once
    for (std::size_t i = 0; i < qh.size(); ++i) qh.data()[i] *= inv_sqrt_dh;
    scores.resize(frames, frames);
    matmul_nt(qh, kh, scores);
    Mat& a = lc.attn[static_cast<std::size_t>(h)];
    a.resize(frames, frames);
    for (std::size_t i = 0; i < frames; ++i) {
      const double* srow = scores.row(i);
      double* arow = a.row(i);
      double mx = srow[0];
      for (std::size_t j = 1; j < frames; ++j) mx = std::max(mx, srow[j]);
      // exp kept free of the reduction so it vectorizes
      for (std::size_t j = 0; j < frames; ++j) arow[j] = exp_fast(srow[j] - mx);
      double sum = 0.0;
      for (std::size_t j = 0; j < frames; ++j) sum += arow[j];
      const double inv = 1.0 / sum;
      for (std::size_t j = 0; j < frames; ++j) arow[j] *= inv;
    }
    ctxh.resize(frames, dh);
    matmul(a, vh, ctxh);
    for (std::size_t i = 0; i < frames; ++i)
      std::memcpy(lc.context.row(i) + static_cast<std::size_t>(h) * dh, ctxh.row(i),
                  dh * sizeof(double));
  }

  lc.h_mid.resize(frames, M);
  linear(lc.context, params.find(p + "attn.wo").mat(), params.find(p + "attn.bo").value, lc.h_mid);
  for (std::size_t i = 0; i < lc.h_mid.size(); ++i) lc.h_mid.data()[i] += h_in.data()[i];

  layer_norm(lc.h_mid, params.find(p + "ln2.gamma").value, params.find(p + "ln2.beta").value,
             lc.ln2_hat, lc.ln2_inv_std, lc.ln2_out);

  lc.ffn_pre.resize(frames, cfg.ffn_dim());
  linear(lc.ln2_out, params.find(p + "ffn.w1").mat(), params.find(p + "ffn.b1").value, lc.ffn_pre);
  lc.ffn_act.resize(frames, cfg.ffn_dim());
  for (std::size_t i = 0; i < lc.ffn_pre.size(); ++i)
    lc.ffn_act.data()[i] = gelu(lc.ffn_pre.data()[i]);

  h_out.resize(frames, M);
  linear(lc.ffn_act, params.find(p + "ffn.w2").mat(), params.find(p + "ffn.b2").value, h_out);
  for (std::size_t i = 0; i < h_out.size(); ++i) h_out.data()[i] += lc.h_mid.data()[i];
}

// d_out is the gradient at this layer's output; on return d_in holds the
// gradient at its input. Everything needed is in the layer cache.
void encoder_layer_backward(ModelParams& params, int layer, const LayerCache& lc, WorkBuffers& work,
                            CMatView d_out, Mat& d_in) {
  const ModelConfig& cfg = params.config();
  const std::size_t frames = lc.h_mid.rows();
  const std::size_t M = cfg.d_model;
  const std::size_t dh = cfg.head_dim();
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::string p = "layers." + std::to_string(layer) + ".";

  // FFN block: h_out = h_mid + gelu(ln2_out*W1 + b1)*W2 + b2.
  auto& w2 = params.find(p + "ffn.w2");
  matmul_tn(lc.ffn_act, d_out, w2.grad_mat(), true);
  add_colsum(d_out, params.find(p + "ffn.b2").grad);
  Mat& d_act = work.d_act;
  d_act.resize(frames, cfg.ffn_dim());
  matmul_nt(d_out, w2.mat(), d_act);
  for (std::size_t i = 0; i < d_act.size(); ++i)
    d_act.data()[i] *= gelu_grad(lc.ffn_pre.data()[i]);
  auto& w1 = params.find(p + "ffn.w1");
  matmul_tn(lc.ln2_out, d_act, w1.grad_mat(), true);
  add_colsum(d_act, params.find(p + "ffn.b1").grad);
  Mat& d_ln2_out = work.d_ln2_out;
  d_ln2_out.resize(frames, M);
  matmul_nt(d_act, w1.mat(), d_ln2_out);

  // d at h_mid: residual path plus LN2 backward.
  Mat& d_mid = work.d_mid;
  d_mid.resize(frames, M);
  std::memcpy(d_mid.data(), d_out.data, frames * M * sizeof(double));
  layer_norm_backward(d_ln2_out, lc.ln2_hat, lc.ln2_inv_std, params.find(p + "ln2.gamma").value,
                      params.find(p + "ln2.gamma").grad, params.find(p + "ln2.beta").grad,
                      d_mid.view(), /*accumulate_dx=*/true);

  // Attention block: h_mid = h_in + context*Wo + bo.
  auto& wo = params.find(p + "attn.wo");
  matmul_tn(lc.context, d_mid, wo.grad_mat(), true);
  add_colsum(d_mid, params.find(p + "attn.bo").grad);
  Mat& d_ctx = work.d_ctx;
  d_ctx.resize(frames, M);
  matmul_nt(d_mid, wo.mat(), d_ctx);

  Mat& d_qrot = work.d_qrot;
  Mat& d_krot = work.d_krot;
  Mat& d_v = work.d_v;
  d_qrot.resize(frames, M);
  d_qrot.fill(0.0);
  d_krot.resize(frames, M);
  d_krot.fill(0.0);
  d_v.resize(frames, M);
  d_v.fill(0.0);
  Mat& qh = work.qh;
  Mat& kh = work.kh;
  Mat& vh = work.vh;
  Mat& d_ctxh = work.d_ctxh;
  Mat& d_a = work.d_a;
  Mat& d_s = work.d_s;
  Mat& d_qh = work.d_qh;
  Mat& d_kh = work.d_kh;
  Mat& d_vh = work.d_vh;
  for (int h = 0; h < cfg.n_heads; ++h) {
    copy_head(lc.q_rot, static_cast<std::size_t>(h), dh, qh);
    copy_head(lc.k_rot, static_cast<std::size_t>(h), dh, kh);
    copy_head(lc.v, static_cast<std::size_t>(h), dh, vh);
    copy_head(d_ctx, static_cast<std::size_t>(h), dh, d_ctxh);
    const Mat& a = lc.attn[static_cast<std::size_t>(h)];

    d_a.resize(frames, frames);
    matmul_nt(d_ctxh, vh, d_a);
    d_vh.resize(frames, dh);
    matmul_tn(a, d_ctxh, d_vh);

    // softmax rows: dS = A .* (dA - rowdot(A, dA))
    d_s.resize(frames, frames);
    for (std::size_t i = 0; i < frames; ++i) {
      const double* arow = a.row(i);
      const double* darow = d_a.row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < frames; ++j) dot += arow[j] * darow[j];
      double* dsrow = d_s.row(i);
      for (std::size_t j = 0; j < frames; ++j)
        dsrow[j] = arow[j] * (darow[j] - dot) * inv_sqrt_dh;
    }

    d_qh.resize(frames, dh);
    matmul(d_s, kh, d_qh);
    d_kh.resize(frames, dh);
    matmul_tn(d_s, qh, d_kh);

    add_head_back(d_qh, static_cast<std::size_t>(h), dh, d_qrot);
    add_head_back(d_kh, static_cast<std::size_t>(h), dh, d_krot);
    add_head_back(d_vh, static_cast<std::size_t>(h), dh, d_v);
  }

  // Un-rotate: the rotation is orthogonal, its adjoint is the inverse spin.
  rope_rotate_rows(d_qrot, cfg, true);
  rope_rotate_rows(d_krot, cfg, true);

  auto& wq = params.find(p + "attn.wq");
  auto& wk = params.find(p + "attn.wk");
  auto& wv = params.find(p + "attn.wv");
  matmul_tn(lc.ln1_out, d_qrot, wq.grad_mat(), true);
  matmul_tn(lc.ln1_out, d_krot, wk.grad_mat(), true);
  matmul_tn(lc.ln1_out, d_v, wv.grad_mat(), true);
  add_colsum(d_qrot, params.find(p + "attn.bq").grad);
  add_colsum(d_krot, params.find(p + "attn.bk").grad);
  add_colsum(d_v, params.find(p + "attn.bv").grad);

  Mat d_ln1_out(frames, M);
  matmul_nt(d_qrot, wq.mat(), d_ln1_out);
  matmul_nt(d_krot, wk.mat(), d_ln1_out, true);
  matmul_nt(d_v, wv.mat(), d_ln1_out, true);

  // d at h_in: residual (d_mid) plus LN1 backward.
  d_in.resize(frames, M);
  std::memcpy(d_in.data(), d_mid.data(), frames * M * sizeof(double));
  layer_norm_backward(d_ln1_out, lc.ln1_hat, lc.ln1_inv_std, params.find(p + "ln1.gamma").value,
                      params.find(p + "ln1.gamma").grad, params.find(p + "ln1.beta").grad,
                      d_in.view(), /*accumulate_dx=*/true);
}

}  // namespace

void add_source(MatView h, SourceId src, const ModelParams& params) {
  const ModelConfig& cfg = params.config();
  if (src < 0 || src >= cfg.n_sources) fail(Errc::unknown_source, "source id " + std::to_string(src));
  const auto& emb = params.find("source_embedding");
  const double* erow = emb.value.data() + static_cast<std::size_t>(src) * cfg.d_model;
  for (std::size_t i = 0; i < h.rows; ++i) {
    double* row = h.row(i);
    for (std::size_t j = 0; j < h.cols; ++j) row[j] += erow[j];
  }
}

ForwardOutput forward(CMatView x, SourceId src, const ModelParams& params, ForwardCache* cache) {
  const ModelConfig& cfg = params.config();
  if (x.rows < static_cast<std::size_t>(cfg.downsample_factor))
    fail(Errc::input_too_short, "need at least " + std::to_string(cfg.downsample_factor) + " frames");
  if (x.cols != cfg.input_dim)
    fail(Errc::mismatched_dims, "input dim " + std::to_string(x.cols) + " != configured " +
                                    std::to_string(cfg.input_dim));
  if (src < 0 || src >= cfg.n_sources) fail(Errc::unknown_source, "source id " + std::to_string(src));

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.src = src;
  c.x.resize(x.rows, x.cols);
  std::memcpy(c.x.data(), x.data, x.rows * x.cols * sizeof(double));

  downsample_forward(params, c);
  const std::size_t frames = c.h0.rows();
  add_source(c.h0.view(), src, params);

  c.layers.resize(static_cast<std::size_t>(cfg.n_layers));
  Mat& h = c.work.h;
  Mat& h_next = c.work.h_next;
  h = c.h0;
  for (int l = 0; l < cfg.n_layers; ++l) {
    encoder_layer_forward(params, l, h, c.layers[static_cast<std::size_t>(l)], c.work, h_next);
    std::swap(h, h_next);
  }
  c.encoded = h;

  ForwardOutput out;
  out.frames_out = frames;
  out.boundary_logits.resize(frames);
  const auto& bw = params.find("head.boundary.weight");
  const double bb = params.find("head.boundary.bias").value[0];
  for (std::size_t i = 0; i < frames; ++i) {
    const double* row = c.encoded.row(i);
    double acc = bb;
    for (std::size_t j = 0; j < cfg.d_model; ++j) acc += row[j] * bw.value[j];
    out.boundary_logits[i] = acc;
  }
  out.function_logits.resize(frames, static_cast<std::size_t>(cfg.n_classes));
  linear(c.encoded, params.find("head.function.weight").mat(),
         params.find("head.function.bias").value, out.function_logits);
  return out;
}

ForwardOutput forward(const FeatureTensor& x, SourceId src, const ModelParams& params,
                      ForwardCache* cache) {
  Mat xd(x.frames, x.dim);
  for (std::size_t i = 0; i < x.data.size(); ++i) xd.data()[i] = static_cast<double>(x.data[i]);
  return forward(xd, src, params, cache);
}

void backward(ModelParams& params, ForwardCache& cache, const OutputGrads& upstream) {
  const ModelConfig& cfg = params.config();
  const std::size_t frames = cache.encoded.rows();
  const std::size_t M = cfg.d_model;
  if (upstream.d_boundary.size() != frames ||
      upstream.d_function.rows() != frames ||
      upstream.d_function.cols() != static_cast<std::size_t>(cfg.n_classes))
    fail(Errc::length_mismatch, "upstream gradient shapes do not match the forward output");

  // Heads.
  auto& bw = params.find("head.boundary.weight");
  auto& bbias = params.find("head.boundary.bias");
  auto& fw = params.find("head.function.weight");
  auto& fbias = params.find("head.function.bias");

  Mat d_enc(frames, M);
  for (std::size_t i = 0; i < frames; ++i) {
    const double db = upstream.d_boundary[i];
    const double* erow = cache.encoded.row(i);
    double* drow = d_enc.row(i);
    for (std::size_t j = 0; j < M; ++j) {
      drow[j] = db * bw.value[j];
      bw.grad[j] += db * erow[j];
    }
    bbias.grad[0] += db;
  }
  matmul_tn(cache.encoded, upstream.d_function, fw.grad_mat(), true);
  add_colsum(upstream.d_function, fbias.grad);
  matmul_nt(upstream.d_function, fw.mat(), d_enc, true);

  // Encoder layers in reverse.
  Mat d = std::move(d_enc);
  Mat d_prev;
  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    encoder_layer_backward(params, l, cache.layers[static_cast<std::size_t>(l)], cache.work, d,
                           d_prev);
    std::swap(d, d_prev);
  }

  // Source embedding: the row is added to every frame.
  auto& emb = params.find("source_embedding");
  double* egrad = emb.grad.data() + static_cast<std::size_t>(cache.src) * M;
  for (std::size_t i = 0; i < frames; ++i) {
    const double* drow = d.row(i);
    for (std::size_t j = 0; j < M; ++j) egrad[j] += drow[j];
  }

  downsample_backward(params, cache, d);
}

}  // namespace songseg
