// SPDX-License-Identifier: Apache-2.0
//
// Dataset directories: one .sfa per track plus either a bare <stem>.sff or
// per-extractor/window files <stem>.<extractor>.<local30|global420>.sff that
// are fused on load.
#pragma once

#include <string>
#include <vector>

#include "songseg/annotation.hpp"
#include "songseg/feature_io.hpp"
#include "songseg/trainer.hpp"

namespace songseg {

struct CorpusOptions {
  FusionConfig fusion;
  SourceTable sources = SourceTable::standard();
  const MappingProfile* profile = &default_profile();
  SourceId default_source = 0;
};

// Loads every stem with both an annotation and features, sorted by stem.
std::vector<TrackExample> load_corpus(const std::string& dir, const CorpusOptions& opts,
                                      FuseStats* stats = nullptr);

// Annotation stems in a directory, sorted (shared by eval pairing).
std::vector<std::string> annotation_stems(const std::string& dir);

}  // namespace songseg
