// SPDX-License-Identifier: Apache-2.0
#include "songseg/corpus.hpp"

#include <algorithm>
#include <filesystem>

#include "songseg/io_util.hpp"

namespace songseg {

namespace fs = std::filesystem;

namespace {

std::string stem_of(const fs::path& p) {
  std::string name = p.filename().string();
  const std::size_t dot = name.find('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

}  // namespace

std::vector<std::string> annotation_stems(const std::string& dir) {
  std::vector<std::string> stems;
  if (!fs::is_directory(dir)) fail(Errc::io_failure, "not a directory: " + dir);
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".sfa") continue;
    stems.push_back(stem_of(e.path()));
  }
  std::sort(stems.begin(), stems.end());
  stems.erase(std::unique(stems.begin(), stems.end()), stems.end());
  return stems;
}

std::vector<TrackExample> load_corpus(const std::string& dir, const CorpusOptions& opts,
                                      FuseStats* stats) {
  const auto stems = annotation_stems(dir);
  std::vector<TrackExample> tracks;
  tracks.reserve(stems.size());
  for (const auto& stem : stems) {
    const fs::path base = fs::path(dir) / stem;
    TrackExample track;
    track.id = stem;

    SfaMeta meta;
    track.annotation = parse_annotation(read_text_file(base.string() + ".sfa"),
                                        opts.default_source, *opts.profile, &meta);
    track.policy = meta.policy;
    if (meta.source_name) {
      auto id = opts.sources.find(*meta.source_name);
      if (!id) fail(Errc::unknown_source, *meta.source_name + " (" + stem + ")");
      track.annotation.source = *id;
    }

    const std::string bare = base.string() + ".sff";
    if (fs::exists(bare)) {
      track.features = read_feature_file(bare);
    } else {
      // Per-extractor window files, fused in config order. The reserve keeps
      // the pointers in `pairs` stable while loading.
      std::vector<FeatureTensor> owned;
      std::vector<ExtractorPair> pairs;
      owned.reserve(opts.fusion.extractors.size() * 2);
      for (const auto& ex : opts.fusion.extractors) {
        ExtractorPair pair;
        const std::string local = base.string() + "." + ex + ".local30.sff";
        const std::string global = base.string() + "." + ex + ".global420.sff";
        if (opts.fusion.use_local && fs::exists(local)) {
          owned.push_back(read_feature_file(local));
          pair.local = &owned.back();
        }
        if (opts.fusion.use_global && fs::exists(global)) {
          owned.push_back(read_feature_file(global));
          pair.global = &owned.back();
        }
        pairs.push_back(pair);
      }
      bool any = false;
      for (const auto& p : pairs) any = any || p.local || p.global;
      if (!any) fail(Errc::missing_pair, "no feature files for stem " + stem);
      track.features = fuse(pairs, opts.fusion, stats);
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

}  // namespace songseg
