// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container: "SSC1" magic, u32 LE version, u32 LE JSON header
// length, JSON header (model config, source table, parameter manifest with
// shapes), then each parameter's f32 LE payload in manifest order.
#pragma once

#include <string>

#include "songseg/annotation.hpp"
#include "songseg/model.hpp"

namespace songseg {

void save_checkpoint(const std::string& path, const ModelParams& params, const SourceTable& sources);

struct LoadedCheckpoint {
  ModelParams params;
  SourceTable sources;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace songseg
