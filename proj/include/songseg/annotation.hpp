// SPDX-License-Identifier: Apache-2.0
//
// Annotation data model: structural labels, timed segments, the .sfa text
// format, and the normalization steps that reconcile heterogeneous sources
// (label mapping profiles, gap resolution, evaluation-time label merging).
#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "songseg/error.hpp"

namespace songseg {

// Training vocabulary: 8 classes. Evaluation folds pre_chorus into verse,
// leaving 7.
enum class Label : int {
  intro = 0,
  verse = 1,
  pre_chorus = 2,
  chorus = 3,
  bridge = 4,
  inst = 5,
  outro = 6,
  silence = 7,
};

inline constexpr int kNumClasses = 8;

std::string_view label_name(Label l);
std::optional<Label> label_from_name(std::string_view name);

using SourceId = int;

// Registered dataset sources. Order is fixed by configuration and persisted
// with checkpoints.
struct SourceTable {
  std::vector<std::string> names;

  static SourceTable standard();  // {HX, P, H, G}
  std::optional<SourceId> find(std::string_view name) const;
  const std::string& name(SourceId id) const;
  int size() const { return static_cast<int>(names.size()); }
};

struct Segment {
  double start = 0.0;
  Label label = Label::intro;
};

struct TimeRange {
  double begin = 0.0;
  double end = 0.0;
};

// Ordered (start, label) pairs plus the track end time. valid_ranges marks
// the annotated spans of partially annotated tracks.
struct Annotation {
  std::vector<Segment> segments;
  double end = 0.0;
  SourceId source = 0;
  std::vector<TimeRange> valid_ranges;

  double duration() const { return end; }
  // Throws on invariant violations (ordering, bounds, range overlap).
  void validate() const;
  // Label of the segment containing time t (t >= end clamps to the last one).
  Label label_at(double t) const;
};

enum class MaskPolicy { full, hook, gem };

std::string_view mask_policy_name(MaskPolicy p);
std::optional<MaskPolicy> mask_policy_from_name(std::string_view name);

// Raw-label -> canonical-label table. Profiles are data: built-in ones cover
// the common cases and arbitrary tables can be loaded from config.
struct MappingProfile {
  std::string name;
  std::map<std::string, Label, std::less<>> table;
  std::optional<Label> fallback;
};

const MappingProfile& identity_profile();
const MappingProfile& default_profile();   // canonical names plus common aliases
const MappingProfile& all_in_one_profile();
const MappingProfile* find_builtin_profile(std::string_view name);

Label map_label(std::string_view raw, const MappingProfile& profile);

// Optional header metadata carried by .sfa files.
struct SfaMeta {
  std::optional<std::string> source_name;
  MaskPolicy policy = MaskPolicy::full;
};

// Parses .sfa text: "<start_seconds> <label>" lines, final "<end_seconds> end",
// optional "# key=value" header lines. Raw labels go through the profile.
Annotation parse_annotation(std::string_view text, SourceId source,
                            const MappingProfile& profile = default_profile(),
                            SfaMeta* meta = nullptr);

// Seconds are printed with exactly 3 fractional digits; header lines are
// emitted only for non-default metadata.
std::string serialize_annotation(const Annotation& ann, std::string_view source_name = {},
                                 MaskPolicy policy = MaskPolicy::full);

// A segment with an explicit extent, as found in raw sources whose
// consecutive segments may leave gaps.
struct RangedSegment {
  double start = 0.0;
  double stop = 0.0;
  Label label = Label::intro;
};

// Gap resolution: each segment extends to the next segment's onset, so the
// subsequent onset becomes the boundary. Total duration is unchanged.
Annotation resolve_gaps(std::span<const RangedSegment> segments, double end, SourceId source);
Annotation resolve_gaps(const Annotation& ann);  // gapless input is a fixed point

// Evaluation mapping: pre_chorus -> verse, then adjacent equal labels merged
// (earliest start kept).
Annotation merge_eval_labels(const Annotation& ann);

// Clips the annotation to [0, max_duration]; segments starting at or past the
// cut are dropped and valid_ranges are clamped.
Annotation truncate_annotation(const Annotation& ann, double max_duration);

}  // namespace songseg
