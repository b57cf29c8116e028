// SPDX-License-Identifier: Apache-2.0
//
// Batch front end: JSON configs with full defaulting, reproducible run
// manifests, and the subcommand implementations behind the songseg binary.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "songseg/corpus.hpp"
#include "songseg/metrics.hpp"
#include "songseg/model.hpp"
#include "songseg/synth.hpp"
#include "songseg/trainer.hpp"

namespace songseg {

// Everything a run can configure, every field defaulted.
struct AppConfig {
  ModelConfig model;
  TrainConfig train;
  FusionConfig fusion;
  SynthSpec synth;
  SourceTable sources = SourceTable::standard();
  std::string profile = "default";
  std::string default_source = "HX";
  std::string train_dir;
  std::string val_dir;
};

AppConfig parse_app_config(const nlohmann::json& j);
AppConfig load_app_config(const std::string& path);  // missing path = all defaults
nlohmann::json app_config_to_json(const AppConfig& cfg);

// FNV-1a 64 over the canonical serialized config.
std::string config_hash(const nlohmann::json& j);

// manifest.json written into every output directory.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const nlohmann::json& config, uint64_t seed,
                    const std::vector<std::string>& inputs);

struct SynthCmd {
  std::string out_dir;
  int count = 10;
  uint64_t seed = 7;
  std::string source = "HX";
  MaskPolicy policy = MaskPolicy::full;
  AppConfig cfg;
};
void cmd_synth(const SynthCmd& cmd);

struct TrainCmd {
  std::string out_dir;
  AppConfig cfg;
  nlohmann::json raw_config;  // as loaded, for the manifest
};
void cmd_train(const TrainCmd& cmd);

struct InferCmd {
  std::string checkpoint;
  std::string features_dir;
  std::string out_dir;
  int workers = 0;
  DecodeConfig decode;
  FusionConfig fusion;
};
void cmd_infer(const InferCmd& cmd);

struct EvalCmd {
  std::string ref_dir;
  std::string est_dir;
  std::string report_path;  // empty = <est_dir>/report.txt
  int workers = 0;
};
MetricReport cmd_eval(const EvalCmd& cmd);

struct TargetsCmd {
  std::string annotation;
  std::string out_path;
  double frame_rate = kModelFrameRate;
  int half_width = 10;
};
void cmd_targets(const TargetsCmd& cmd);

struct ConvertCmd {
  std::string input;
  std::string output;
  std::vector<std::string> assemble_chunks;  // time-axis assembly when non-empty
};
void cmd_convert(const ConvertCmd& cmd);

// Exit code per error class, documented in the README.
int exit_code_for(Errc code);

}  // namespace songseg
