// SPDX-License-Identifier: Apache-2.0
#include "songseg/annotation.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace songseg {

namespace {

constexpr std::array<std::string_view, kNumClasses> kLabelNames = {
    "intro", "verse", "pre-chorus", "chorus", "bridge", "inst", "outro", "silence"};

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_seconds(std::string_view tok) {
  if (tok.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_seconds(double t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", t);
  return buf;
}

}  // namespace

std::string_view label_name(Label l) { return kLabelNames[static_cast<int>(l)]; }

std::optional<Label> label_from_name(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i)
    if (kLabelNames[static_cast<std::size_t>(i)] == name) return static_cast<Label>(i);
  return std::nullopt;
}

SourceTable SourceTable::standard() { return SourceTable{{"HX", "P", "H", "G"}}; }

std::optional<SourceId> SourceTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<SourceId>(i);
  return std::nullopt;
}

const std::string& SourceTable::name(SourceId id) const {
  if (id < 0 || id >= size()) fail(Errc::unknown_source, "source id " + std::to_string(id));
  return names[static_cast<std::size_t>(id)];
}

void Annotation::validate() const {
  if (segments.empty()) fail(Errc::malformed_line, "annotation has no segments");
  double prev = -1.0;
  for (const auto& s : segments) {
    if (!std::isfinite(s.start) || s.start < 0.0)
      fail(Errc::malformed_line, "segment start " + std::to_string(s.start));
    if (s.start <= prev) fail(Errc::non_monotonic_times, "segment starts must strictly increase");
    prev = s.start;
  }
  if (!(end > segments.back().start)) fail(Errc::non_monotonic_times, "end must exceed the last start");
  double cursor = 0.0;
  for (const auto& r : valid_ranges) {
    if (r.begin < cursor || r.end <= r.begin || r.end > end)
      fail(Errc::malformed_line, "valid_ranges must be disjoint, sorted and within [0, end]");
    cursor = r.end;
  }
}

Label Annotation::label_at(double t) const {
  Label out = segments.front().label;
  for (const auto& s : segments) {
    if (s.start <= t + 1e-9)
      out = s.label;
    else
      break;
  }
  return out;
}

std::string_view mask_policy_name(MaskPolicy p) {
  switch (p) {
    case MaskPolicy::full: return "full";
    case MaskPolicy::hook: return "hook";
    case MaskPolicy::gem:  return "gem";
  }
  return "full";
}

std::optional<MaskPolicy> mask_policy_from_name(std::string_view name) {
  if (name == "full") return MaskPolicy::full;
  if (name == "hook") return MaskPolicy::hook;
  if (name == "gem") return MaskPolicy::gem;
  return std::nullopt;
}

namespace {

MappingProfile make_identity() {
  MappingProfile p;
  p.name = "identity";
  for (int i = 0; i < kNumClasses; ++i) {
    Label l = static_cast<Label>(i);
    p.table.emplace(std::string(label_name(l)), l);
  }
  return p;
}

MappingProfile make_default() {
  MappingProfile p = make_identity();
  p.name = "default";
  p.table.emplace("prechorus", Label::pre_chorus);
  p.table.emplace("pre_chorus", Label::pre_chorus);
  p.table.emplace("refrain", Label::chorus);
  p.table.emplace("instrumental", Label::inst);
  p.table.emplace("interlude", Label::inst);
  p.table.emplace("solo", Label::inst);
  p.table.emplace("break", Label::inst);
  return p;
}

MappingProfile make_all_in_one() {
  MappingProfile p = make_identity();
  p.name = "all-in-one";
  p.table.emplace("start", Label::silence);
  p.table.emplace("end", Label::silence);
  p.table.emplace("break", Label::inst);
  p.table.emplace("solo", Label::inst);
  return p;
}

}  // namespace

const MappingProfile& identity_profile() {
  static const MappingProfile p = make_identity();
  return p;
}

const MappingProfile& default_profile() {
  static const MappingProfile p = make_default();
  return p;
}

const MappingProfile& all_in_one_profile() {
  static const MappingProfile p = make_all_in_one();
  return p;
}

const MappingProfile* find_builtin_profile(std::string_view name) {
  if (name == "identity") return &identity_profile();
  if (name == "default") return &default_profile();
  if (name == "all-in-one") return &all_in_one_profile();
  return nullptr;
}

Label map_label(std::string_view raw, const MappingProfile& profile) {
  auto it = profile.table.find(raw);
  if (it != profile.table.end()) return it->second;
  if (profile.fallback) return *profile.fallback;
  fail(Errc::unmapped_label, "\"" + std::string(raw) + "\" not in profile " + profile.name);
}

namespace {

std::vector<TimeRange> parse_valid_ranges(std::string_view value) {
  std::vector<TimeRange> out;
  std::size_t pos = 0;
  while (pos < value.size()) {
    std::size_t semi = value.find(';', pos);
    std::string_view piece = trim(value.substr(pos, semi == std::string_view::npos ? semi : semi - pos));
    pos = semi == std::string_view::npos ? value.size() : semi + 1;
    if (piece.empty()) continue;
    std::size_t dash = piece.find('-');
    if (dash == std::string_view::npos) fail(Errc::malformed_line, "valid_ranges entry: " + std::string(piece));
    auto a = parse_seconds(trim(piece.substr(0, dash)));
    auto b = parse_seconds(trim(piece.substr(dash + 1)));
    if (!a || !b) fail(Errc::malformed_line, "valid_ranges entry: " + std::string(piece));
    out.push_back(TimeRange{*a, *b});
  }
  return out;
}

void parse_header_line(std::string_view line, Annotation& ann, SfaMeta* meta) {
  std::string_view body = trim(line.substr(1));
  std::size_t eq = body.find('=');
  if (eq == std::string_view::npos) return;  // free-form comment
  std::string_view key = trim(body.substr(0, eq));
  std::string_view value = trim(body.substr(eq + 1));
  if (key == "valid_ranges") {
    ann.valid_ranges = parse_valid_ranges(value);
  } else if (key == "source") {
    if (meta) meta->source_name = std::string(value);
  } else if (key == "policy") {
    auto p = mask_policy_from_name(value);
    if (!p) fail(Errc::malformed_line, "unknown policy: " + std::string(value));
    if (meta) meta->policy = *p;
  }
}

}  // namespace

Annotation parse_annotation(std::string_view text, SourceId source, const MappingProfile& profile,
                            SfaMeta* meta) {
  Annotation ann;
  ann.source = source;

  struct Record {
    double seconds;
    std::string label;
    std::size_t line_no;
  };
  std::vector<Record> records;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_blank(line)) continue;
    if (line.front() == '#') {
      parse_header_line(line, ann, meta);
      continue;
    }
    std::string_view rest = trim(line);
    std::size_t sp = rest.find_first_of(" \t");
    if (sp == std::string_view::npos)
      fail(Errc::malformed_line, "line " + std::to_string(line_no) + ": expected \"<seconds> <label>\"");
    auto secs = parse_seconds(rest.substr(0, sp));
    std::string_view raw_label = trim(rest.substr(sp + 1));
    if (!secs || raw_label.empty())
      fail(Errc::malformed_line, "line " + std::to_string(line_no) + ": expected \"<seconds> <label>\"");
    if (*secs < 0.0) fail(Errc::malformed_line, "line " + std::to_string(line_no) + ": negative time");
    records.push_back(Record{*secs, std::string(raw_label), line_no});
  }

  // The last record must be the terminal "end" keyword; a non-terminal "end"
  // is an ordinary raw label and goes through the profile.
  if (records.empty() || records.back().label != "end")
    fail(Errc::missing_end, "no terminal end record");
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].seconds <= records[i - 1].seconds)
      fail(Errc::non_monotonic_times,
           "line " + std::to_string(records[i].line_no) + ": times must strictly increase");
  }
  for (std::size_t i = 0; i + 1 < records.size(); ++i)
    ann.segments.push_back(Segment{records[i].seconds, map_label(records[i].label, profile)});
  ann.end = records.back().seconds;
  ann.validate();
  return ann;
}

std::string serialize_annotation(const Annotation& ann, std::string_view source_name, MaskPolicy policy) {
  ann.validate();
  std::string out;
  if (!source_name.empty()) {
    out += "# source=";
    out += source_name;
    out += '\n';
  }
  if (policy != MaskPolicy::full) {
    out += "# policy=";
    out += mask_policy_name(policy);
    out += '\n';
  }
  if (!ann.valid_ranges.empty()) {
    out += "# valid_ranges=";
    for (std::size_t i = 0; i < ann.valid_ranges.size(); ++i) {
      if (i) out += ';';
      out += format_seconds(ann.valid_ranges[i].begin);
      out += '-';
      out += format_seconds(ann.valid_ranges[i].end);
    }
    out += '\n';
  }
  for (const auto& s : ann.segments) {
    out += format_seconds(s.start);
    out += ' ';
    out += label_name(s.label);
    out += '\n';
  }
  out += format_seconds(ann.end);
  out += " end\n";
  return out;
}

Annotation resolve_gaps(std::span<const RangedSegment> segments, double end, SourceId source) {
  if (segments.empty()) fail(Errc::malformed_line, "no segments to resolve");
  Annotation ann;
  ann.source = source;
  ann.end = end;
  ann.segments.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!(s.stop > s.start)) fail(Errc::malformed_line, "segment extent must be positive");
    if (i + 1 < segments.size() && s.stop > segments[i + 1].start + 1e-9)
      fail(Errc::non_monotonic_times, "segment extents overlap");
    ann.segments.push_back(Segment{s.start, s.label});
  }
  ann.validate();
  return ann;
}

Annotation resolve_gaps(const Annotation& ann) {
  ann.validate();
  return ann;
}

Annotation merge_eval_labels(const Annotation& ann) {
  Annotation out;
  out.end = ann.end;
  out.source = ann.source;
  out.valid_ranges = ann.valid_ranges;
  for (const auto& s : ann.segments) {
    Label l = s.label == Label::pre_chorus ? Label::verse : s.label;
    if (out.segments.empty() || out.segments.back().label != l) out.segments.push_back(Segment{s.start, l});
  }
  return out;
}

Annotation truncate_annotation(const Annotation& ann, double max_duration) {
  if (ann.end <= max_duration) return ann;
  Annotation out;
  out.source = ann.source;
  out.end = max_duration;
  for (const auto& s : ann.segments) {
    if (s.start < max_duration) out.segments.push_back(s);
  }
  for (const auto& r : ann.valid_ranges) {
    if (r.begin >= max_duration) break;
    out.valid_ranges.push_back(TimeRange{r.begin, std::min(r.end, max_duration)});
  }
  out.validate();
  return out;
}

}  // namespace songseg
