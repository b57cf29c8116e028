// SPDX-License-Identifier: Apache-2.0
//
// Feature tensors and the SFF1 file format, plus the multi-resolution fusion
// steps: time-axis assembly of 30 s chunks and feature-axis fusion of
// local/global windows across extractors.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "songseg/error.hpp"

namespace songseg {

enum class WindowKind : uint8_t { local30 = 0, global420 = 1 };

struct FeatureTensor {
  std::vector<float> data;  // row-major frames x dim; f32 storage, 64-bit compute downstream
  std::size_t frames = 0;
  std::size_t dim = 0;
  double frame_rate = 25.0;
  std::string extractor_id;
  WindowKind window = WindowKind::local30;

  float at(std::size_t t, std::size_t d) const { return data[t * dim + d]; }
  float& at(std::size_t t, std::size_t d) { return data[t * dim + d]; }
  const float* row(std::size_t t) const { return data.data() + t * dim; }
  float* row(std::size_t t) { return data.data() + t * dim; }
  double duration() const { return static_cast<double>(frames) / frame_rate; }

  void validate() const;  // shape and finiteness
};

// SFF1: magic "SFF1"; u32 LE version=1; u32 LE T; u32 LE D; f64 LE frame_rate;
// u8 window_kind; u16 LE extractor_id length + UTF-8 bytes; T*D f32 LE
// row-major payload. No padding.
FeatureTensor read_feature_file(const std::string& path);
void write_feature_file(const FeatureTensor& t, const std::string& path);

// In-memory codec (exposed for tests and tools).
std::vector<unsigned char> encode_sff1(const FeatureTensor& t);
FeatureTensor decode_sff1(std::span<const unsigned char> bytes);

// Time-axis concatenation of equal-dim, equal-rate chunks.
FeatureTensor assemble_local(std::span<const FeatureTensor> chunks);

struct FusionConfig {
  bool use_local = true;
  bool use_global = true;
  std::vector<std::string> extractors = {"synth"};
  double chunk_seconds = 30.0;
  double global_seconds = 420.0;
  int chunks_per_global = 14;
  int downsample_factor = 3;

  void validate() const;
};

struct FuseStats {
  int truncations = 0;           // inputs shortened to the common length
  std::size_t frames_dropped = 0;
};

// Feature-axis concatenation of one extractor's local/global pair. Length
// mismatches truncate to the shorter input.
FeatureTensor fuse(const FeatureTensor* local, const FeatureTensor* global,
                   const FusionConfig& cfg, FuseStats* stats = nullptr);

struct ExtractorPair {
  const FeatureTensor* local = nullptr;
  const FeatureTensor* global = nullptr;
};

// Local+global per extractor, then concatenation across extractors in config
// order.
FeatureTensor fuse(std::span<const ExtractorPair> per_extractor, const FusionConfig& cfg,
                   FuseStats* stats = nullptr);

}  // namespace songseg
