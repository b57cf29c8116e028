// SPDX-License-Identifier: Apache-2.0
#include "songseg/checkpoint.hpp"

#include <cstring>

#include <json.hpp>

#include "songseg/io_util.hpp"

namespace songseg {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'S', 'S', 'C', '1'};
constexpr uint32_t kVersion = 1;

json config_to_json(const ModelConfig& c) {
  return json{{"input_dim", c.input_dim},   {"d_model", c.d_model},
              {"n_layers", c.n_layers},     {"n_heads", c.n_heads},
              {"n_sources", c.n_sources},   {"n_classes", c.n_classes},
              {"downsample_factor", c.downsample_factor},
              {"dw_kernel", c.dw_kernel},   {"ffn_mult", c.ffn_mult},
              {"rope_base", c.rope_base}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_layers = j.at("n_layers").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.n_sources = j.at("n_sources").get<int>();
  c.n_classes = j.at("n_classes").get<int>();
  c.downsample_factor = j.at("downsample_factor").get<int>();
  c.dw_kernel = j.at("dw_kernel").get<int>();
  c.ffn_mult = j.at("ffn_mult").get<int>();
  c.rope_base = j.at("rope_base").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params, const SourceTable& sources) {
  json header;
  header["config"] = config_to_json(params.config());
  header["sources"] = sources.names;
  json manifest = json::array();
  for (const auto& t : params.tensors())
    manifest.push_back(json{{"name", t.name}, {"shape", t.shape}});
  header["params"] = manifest;
  const std::string hdr = header.dump();

  std::vector<unsigned char> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  auto put_u32 = [&](uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
  };
  put_u32(kVersion);
  put_u32(static_cast<uint32_t>(hdr.size()));
  out.insert(out.end(), hdr.begin(), hdr.end());
  for (const auto& t : params.tensors()) {
    for (double v : t.value) {
      const float f = static_cast<float>(v);
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(bits);
    }
  }
  write_binary_file(path, out.data(), out.size());
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  auto bytes = read_binary_file(path);
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) fail(Errc::truncated_file, "checkpoint ends early: " + path);
  };
  need(4);
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(Errc::bad_magic, "not a checkpoint: " + path);
  pos = 4;
  auto get_u32 = [&]() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 4;
    return v;
  };
  const uint32_t version = get_u32();
  if (version != kVersion) fail(Errc::bad_magic, "unsupported checkpoint version");
  const uint32_t hdr_len = get_u32();
  need(hdr_len);
  json header;
  try {
    header = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                         bytes.begin() + static_cast<std::ptrdiff_t>(pos + hdr_len));
  } catch (const json::exception& e) {
    fail(Errc::bad_magic, std::string("checkpoint header: ") + e.what());
  }
  pos += hdr_len;

  LoadedCheckpoint loaded;
  loaded.params = ModelParams(config_from_json(header.at("config")));
  loaded.sources.names = header.at("sources").get<std::vector<std::string>>();

  const auto& manifest = header.at("params");
  if (manifest.size() != loaded.params.tensors().size())
    fail(Errc::bad_magic, "parameter manifest does not match the configuration");
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    auto& t = loaded.params.tensors()[i];
    if (manifest[i].at("name").get<std::string>() != t.name)
      fail(Errc::bad_magic, "unexpected parameter order in checkpoint");
    const auto shape = manifest[i].at("shape").get<std::vector<std::size_t>>();
    if (shape != t.shape) fail(Errc::bad_magic, "shape mismatch for " + t.name);
    need(t.size() * 4);
    for (std::size_t k = 0; k < t.size(); ++k) {
      uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= static_cast<uint32_t>(bytes[pos + 4 * k + static_cast<std::size_t>(b)]) << (8 * b);
      float f;
      std::memcpy(&f, &bits, 4);
      t.value[k] = static_cast<double>(f);
    }
    pos += t.size() * 4;
  }
  return loaded;
}

}  // namespace songseg
