// SPDX-License-Identifier: Apache-2.0
#include "songseg/feature_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "songseg/io_util.hpp"

namespace songseg {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'F', '1'};
constexpr uint32_t kVersion = 1;
// Caps T and D so T*D*4 cannot overflow size arithmetic on any platform.
constexpr uint32_t kMaxAxis = 1u << 28;

void put_u32(std::vector<unsigned char>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::vector<unsigned char>& out, uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

void put_f64(std::vector<unsigned char>& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xff));
}

class Cursor {
 public:
  explicit Cursor(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail(Errc::truncated_file, "unexpected end of SFF1 data");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  double f64() {
    need(8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  const unsigned char* take(std::size_t n) {
    need(n);
    const unsigned char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void FeatureTensor::validate() const {
  if (frames < 1 || dim < 1) fail(Errc::dimension_overflow, "tensor must be at least 1x1");
  if (data.size() != frames * dim) fail(Errc::dimension_overflow, "payload size mismatch");
  if (!(frame_rate > 0.0)) fail(Errc::dimension_overflow, "frame rate must be positive");
  for (float v : data)
    if (!std::isfinite(v)) fail(Errc::dimension_overflow, "non-finite value in tensor");
}

std::vector<unsigned char> encode_sff1(const FeatureTensor& t) {
  t.validate();
  if (t.frames > kMaxAxis || t.dim > kMaxAxis) fail(Errc::dimension_overflow, "axis too large for SFF1");
  if (t.extractor_id.size() > std::numeric_limits<uint16_t>::max())
    fail(Errc::dimension_overflow, "extractor id too long");
  std::vector<unsigned char> out;
  out.reserve(27 + t.extractor_id.size() + t.data.size() * 4);
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(t.frames));
  put_u32(out, static_cast<uint32_t>(t.dim));
  put_f64(out, t.frame_rate);
  out.push_back(static_cast<unsigned char>(t.window));
  put_u16(out, static_cast<uint16_t>(t.extractor_id.size()));
  out.insert(out.end(), t.extractor_id.begin(), t.extractor_id.end());
  for (float v : t.data) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
  return out;
}

FeatureTensor decode_sff1(std::span<const unsigned char> bytes) {
  Cursor cur(bytes);
  const unsigned char* magic = cur.take(4);
  if (std::memcmp(magic, kMagic, 4) != 0) fail(Errc::bad_magic, "not an SFF1 file");
  uint32_t version = cur.u32();
  if (version != kVersion) fail(Errc::bad_magic, "unsupported SFF1 version " + std::to_string(version));
  FeatureTensor t;
  uint32_t frames = cur.u32();
  uint32_t dim = cur.u32();
  if (frames == 0 || dim == 0 || frames > kMaxAxis || dim > kMaxAxis)
    fail(Errc::dimension_overflow, "bad T/D in header");
  t.frames = frames;
  t.dim = dim;
  t.frame_rate = cur.f64();
  uint8_t wk = cur.u8();
  if (wk > 1) fail(Errc::bad_magic, "unknown window kind " + std::to_string(wk));
  t.window = static_cast<WindowKind>(wk);
  uint16_t id_len = cur.u16();
  const unsigned char* id = cur.take(id_len);
  t.extractor_id.assign(reinterpret_cast<const char*>(id), id_len);
  const std::size_t payload = static_cast<std::size_t>(frames) * dim;
  if (cur.remaining() < payload * 4) fail(Errc::truncated_file, "payload shorter than T*D");
  const unsigned char* raw = cur.take(payload * 4);
  t.data.resize(payload);
  for (std::size_t i = 0; i < payload; ++i) {
    uint32_t bits = static_cast<uint32_t>(raw[4 * i]) | (static_cast<uint32_t>(raw[4 * i + 1]) << 8) |
                    (static_cast<uint32_t>(raw[4 * i + 2]) << 16) |
                    (static_cast<uint32_t>(raw[4 * i + 3]) << 24);
    std::memcpy(&t.data[i], &bits, 4);
  }
  t.validate();
  return t;
}

FeatureTensor read_feature_file(const std::string& path) {
  auto bytes = read_binary_file(path);
  return decode_sff1(bytes);
}

void write_feature_file(const FeatureTensor& t, const std::string& path) {
  auto bytes = encode_sff1(t);
  write_binary_file(path, bytes.data(), bytes.size());
}

FeatureTensor assemble_local(std::span<const FeatureTensor> chunks) {
  if (chunks.empty()) fail(Errc::mismatched_dims, "no chunks to assemble");
  const auto& first = chunks.front();
  std::size_t total = 0;
  for (const auto& c : chunks) {
    if (c.dim != first.dim || c.frame_rate != first.frame_rate)
      fail(Errc::mismatched_dims, "chunks disagree on D or frame rate");
    total += c.frames;
  }
  FeatureTensor out;
  out.frames = total;
  out.dim = first.dim;
  out.frame_rate = first.frame_rate;
  out.extractor_id = first.extractor_id;
  out.window = WindowKind::local30;
  out.data.reserve(total * first.dim);
  for (const auto& c : chunks) out.data.insert(out.data.end(), c.data.begin(), c.data.end());
  return out;
}

void FusionConfig::validate() const {
  if (!use_local && !use_global) fail(Errc::nothing_to_fuse, "both windows disabled");
  if (std::abs(static_cast<double>(chunks_per_global) * chunk_seconds - global_seconds) > 1e-9)
    fail(Errc::config_error, "chunks_per_global * chunk_seconds must equal global_seconds");
  if (downsample_factor < 1) fail(Errc::config_error, "downsample_factor must be >= 1");
}

namespace {

// Feature-axis concatenation with min-length truncation.
FeatureTensor concat_features(std::span<const FeatureTensor* const> parts, FuseStats* stats) {
  std::size_t frames = std::numeric_limits<std::size_t>::max();
  std::size_t dim = 0;
  double rate = 0.0;
  for (const auto* p : parts) {
    frames = std::min(frames, p->frames);
    dim += p->dim;
    if (rate == 0.0)
      rate = p->frame_rate;
    else if (p->frame_rate != rate)
      fail(Errc::mismatched_dims, "fusion inputs disagree on frame rate");
  }
  if (stats) {
    for (const auto* p : parts) {
      if (p->frames > frames) {
        stats->truncations += 1;
        stats->frames_dropped += p->frames - frames;
      }
    }
  }
  FeatureTensor out;
  out.frames = frames;
  out.dim = dim;
  out.frame_rate = rate;
  out.extractor_id = parts.front()->extractor_id;
  out.window = parts.front()->window;
  out.data.resize(frames * dim);
  for (std::size_t t = 0; t < frames; ++t) {
    float* dst = out.row(t);
    for (const auto* p : parts) {
      std::memcpy(dst, p->row(t), p->dim * sizeof(float));
      dst += p->dim;
    }
  }
  return out;
}

}  // namespace

FeatureTensor fuse(const FeatureTensor* local, const FeatureTensor* global,
                   const FusionConfig& cfg, FuseStats* stats) {
  cfg.validate();
  std::vector<const FeatureTensor*> parts;
  if (cfg.use_local && local) parts.push_back(local);
  if (cfg.use_global && global) parts.push_back(global);
  if (parts.empty()) fail(Errc::nothing_to_fuse, "no enabled inputs present");
  for (const auto* p : parts) p->validate();
  return concat_features(parts, stats);
}

FeatureTensor fuse(std::span<const ExtractorPair> per_extractor, const FusionConfig& cfg,
                   FuseStats* stats) {
  cfg.validate();
  std::vector<FeatureTensor> fused;
  fused.reserve(per_extractor.size());
  for (const auto& pair : per_extractor) {
    if ((cfg.use_local && pair.local) || (cfg.use_global && pair.global))
      fused.push_back(fuse(pair.local, pair.global, cfg, stats));
  }
  if (fused.empty()) fail(Errc::nothing_to_fuse, "no enabled inputs present");
  if (fused.size() == 1) return std::move(fused.front());
  std::vector<const FeatureTensor*> parts;
  parts.reserve(fused.size());
  for (const auto& f : fused) parts.push_back(&f);
  FeatureTensor out = concat_features(parts, stats);
  out.extractor_id = "fused";
  return out;
}

}  // namespace songseg
