// SPDX-License-Identifier: Apache-2.0
#include "songseg/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "songseg/checkpoint.hpp"
#include "songseg/decode.hpp"
#include "songseg/io_util.hpp"
#include "songseg/metrics.hpp"
#include "songseg/parallel.hpp"
#include "songseg/rng.hpp"
#include "songseg/targets.hpp"
#include "songseg/version.hpp"

namespace songseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Errc::config_error, std::string(key) + ": " + e.what());
  }
}

void read_model(const json& j, ModelConfig& m) {
  read_field(j, "input_dim", m.input_dim);
  read_field(j, "d_model", m.d_model);
  read_field(j, "n_layers", m.n_layers);
  read_field(j, "n_heads", m.n_heads);
  read_field(j, "n_sources", m.n_sources);
  read_field(j, "n_classes", m.n_classes);
  read_field(j, "downsample_factor", m.downsample_factor);
  read_field(j, "dw_kernel", m.dw_kernel);
  read_field(j, "ffn_mult", m.ffn_mult);
  read_field(j, "rope_base", m.rope_base);
}

void read_loss(const json& j, LossWeights& w) {
  read_field(j, "lambda", w.lambda);
  read_field(j, "lambda_tv", w.lambda_tv);
  read_field(j, "lambda_focal", w.lambda_focal);
  read_field(j, "tv_beta", w.tv_beta);
  read_field(j, "tv_alpha", w.tv_alpha);
  read_field(j, "tv_region_threshold", w.tv_region_threshold);
  read_field(j, "focal_gamma", w.focal_gamma);
}

void read_decode(const json& j, DecodeConfig& d) {
  read_field(j, "peak_window", d.peak_window);
  read_field(j, "prob_threshold", d.prob_threshold);
  read_field(j, "min_gap", d.min_gap);
  read_field(j, "source", d.source);
}

void read_train(const json& j, TrainConfig& t) {
  read_field(j, "batch_size", t.batch_size);
  read_field(j, "peak_lr", t.peak_lr);
  read_field(j, "warmup_steps", t.warmup_steps);
  read_field(j, "total_steps", t.total_steps);
  read_field(j, "eval_every", t.eval_every);
  read_field(j, "patience", t.patience);
  read_field(j, "seed", t.seed);
  read_field(j, "max_duration", t.max_duration);
  read_field(j, "adam_beta1", t.adam_beta1);
  read_field(j, "adam_beta2", t.adam_beta2);
  read_field(j, "adam_eps", t.adam_eps);
  read_field(j, "workers", t.workers);
  read_field(j, "boundary_half_width", t.boundary_half_width);
  if (j.contains("selection_metric")) {
    const std::string s = j.at("selection_metric").get<std::string>();
    if (s == "acc")
      t.selection = SelectionMetric::acc;
    else if (s == "hr05f")
      t.selection = SelectionMetric::hr05f;
    else if (s == "hr3f")
      t.selection = SelectionMetric::hr3f;
    else
      fail(Errc::config_error, "selection_metric: " + s);
  }
}

void read_fusion(const json& j, FusionConfig& f) {
  read_field(j, "use_local", f.use_local);
  read_field(j, "use_global", f.use_global);
  read_field(j, "extractors", f.extractors);
  read_field(j, "chunk_seconds", f.chunk_seconds);
  read_field(j, "global_seconds", f.global_seconds);
  read_field(j, "chunks_per_global", f.chunks_per_global);
  read_field(j, "downsample_factor", f.downsample_factor);
}

void read_synth(const json& j, SynthSpec& s) {
  read_field(j, "min_duration", s.min_duration);
  read_field(j, "max_duration", s.max_duration);
  read_field(j, "min_segments", s.min_segments);
  read_field(j, "max_segments", s.max_segments);
  read_field(j, "min_segment_seconds", s.min_segment_seconds);
  read_field(j, "dim", s.dim);
  read_field(j, "frame_rate", s.frame_rate);
  read_field(j, "class_seed", s.class_seed);
  read_field(j, "mean_scale", s.mean_scale);
  read_field(j, "noise_sigma", s.noise_sigma);
  read_field(j, "transient_amp", s.transient_amp);
  read_field(j, "transient_width", s.transient_width);
  read_field(j, "extractor_id", s.extractor_id);
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::tm tm_utc{};
  gmtime_r(&tt, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

SourceId resolve_source(const SourceTable& table, const std::string& name) {
  auto id = table.find(name);
  if (!id) fail(Errc::unknown_source, name);
  return *id;
}

}  // namespace

AppConfig parse_app_config(const json& j) {
  AppConfig cfg;
  if (j.contains("model")) read_model(j.at("model"), cfg.model);
  if (j.contains("train")) read_train(j.at("train"), cfg.train);
  if (j.contains("loss")) read_loss(j.at("loss"), cfg.train.loss);
  if (j.contains("decode")) read_decode(j.at("decode"), cfg.train.decode);
  if (j.contains("fusion")) read_fusion(j.at("fusion"), cfg.fusion);
  if (j.contains("synth")) read_synth(j.at("synth"), cfg.synth);
  if (j.contains("data")) {
    const json& d = j.at("data");
    read_field(d, "train_dir", cfg.train_dir);
    read_field(d, "val_dir", cfg.val_dir);
    read_field(d, "profile", cfg.profile);
    read_field(d, "default_source", cfg.default_source);
    if (d.contains("sources")) cfg.sources.names = d.at("sources").get<std::vector<std::string>>();
  }
  cfg.model.n_sources = std::max(cfg.model.n_sources, cfg.sources.size());
  return cfg;
}

AppConfig load_app_config(const std::string& path) {
  if (path.empty()) return AppConfig{};
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    fail(Errc::config_error, path + ": " + e.what());
  }
  return parse_app_config(j);
}

json app_config_to_json(const AppConfig& cfg) {
  json j;
  j["model"] = {{"input_dim", cfg.model.input_dim},
                {"d_model", cfg.model.d_model},
                {"n_layers", cfg.model.n_layers},
                {"n_heads", cfg.model.n_heads},
                {"n_sources", cfg.model.n_sources},
                {"n_classes", cfg.model.n_classes},
                {"downsample_factor", cfg.model.downsample_factor},
                {"dw_kernel", cfg.model.dw_kernel},
                {"ffn_mult", cfg.model.ffn_mult},
                {"rope_base", cfg.model.rope_base}};
  const char* sel = cfg.train.selection == SelectionMetric::acc
                        ? "acc"
                        : cfg.train.selection == SelectionMetric::hr05f ? "hr05f" : "hr3f";
  j["train"] = {{"batch_size", cfg.train.batch_size},
                {"peak_lr", cfg.train.peak_lr},
                {"warmup_steps", cfg.train.warmup_steps},
                {"total_steps", cfg.train.total_steps},
                {"eval_every", cfg.train.eval_every},
                {"patience", cfg.train.patience},
                {"seed", cfg.train.seed},
                {"max_duration", cfg.train.max_duration},
                {"adam_beta1", cfg.train.adam_beta1},
                {"adam_beta2", cfg.train.adam_beta2},
                {"adam_eps", cfg.train.adam_eps},
                {"workers", cfg.train.workers},
                {"boundary_half_width", cfg.train.boundary_half_width},
                {"selection_metric", sel}};
  j["loss"] = {{"lambda", cfg.train.loss.lambda},
               {"lambda_tv", cfg.train.loss.lambda_tv},
               {"lambda_focal", cfg.train.loss.lambda_focal},
               {"tv_beta", cfg.train.loss.tv_beta},
               {"tv_alpha", cfg.train.loss.tv_alpha},
               {"tv_region_threshold", cfg.train.loss.tv_region_threshold},
               {"focal_gamma", cfg.train.loss.focal_gamma}};
  j["decode"] = {{"peak_window", cfg.train.decode.peak_window},
                 {"prob_threshold", cfg.train.decode.prob_threshold},
                 {"min_gap", cfg.train.decode.min_gap},
                 {"source", cfg.train.decode.source}};
  j["fusion"] = {{"use_local", cfg.fusion.use_local},
                 {"use_global", cfg.fusion.use_global},
                 {"extractors", cfg.fusion.extractors},
                 {"chunk_seconds", cfg.fusion.chunk_seconds},
                 {"global_seconds", cfg.fusion.global_seconds},
                 {"chunks_per_global", cfg.fusion.chunks_per_global},
                 {"downsample_factor", cfg.fusion.downsample_factor}};
  j["synth"] = {{"min_duration", cfg.synth.min_duration},
                {"max_duration", cfg.synth.max_duration},
                {"min_segments", cfg.synth.min_segments},
                {"max_segments", cfg.synth.max_segments},
                {"min_segment_seconds", cfg.synth.min_segment_seconds},
                {"dim", cfg.synth.dim},
                {"frame_rate", cfg.synth.frame_rate},
                {"class_seed", cfg.synth.class_seed},
                {"mean_scale", cfg.synth.mean_scale},
                {"noise_sigma", cfg.synth.noise_sigma},
                {"transient_amp", cfg.synth.transient_amp},
                {"transient_width", cfg.synth.transient_width},
                {"extractor_id", cfg.synth.extractor_id}};
  j["data"] = {{"train_dir", cfg.train_dir},
               {"val_dir", cfg.val_dir},
               {"profile", cfg.profile},
               {"default_source", cfg.default_source},
               {"sources", cfg.sources.names}};
  return j;
}

std::string config_hash(const json& j) {
  const std::string s = j.dump();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_manifest(const std::string& out_dir, const std::string& command, const json& config,
                    uint64_t seed, const std::vector<std::string>& inputs) {
  json m;
  m["command"] = command;
  m["config_hash"] = config_hash(config);
  m["seed"] = seed;
  m["inputs"] = inputs;
  m["version"] = kVersion;
  m["timestamp"] = now_iso8601();
  write_text_file((fs::path(out_dir) / "manifest.json").string(), m.dump(2) + "\n");
}

void cmd_synth(const SynthCmd& cmd) {
  if (cmd.count < 0) fail(Errc::config_error, "count must be >= 0");
  fs::create_directories(cmd.out_dir);
  const SourceId src = resolve_source(cmd.cfg.sources, cmd.source);
  for (int i = 0; i < cmd.count; ++i) {
    SynthSong song = synth_song(mix_seed(cmd.seed, static_cast<uint64_t>(i)), cmd.cfg.synth, src);
    char stem[32];
    std::snprintf(stem, sizeof(stem), "track%04d", i);
    const fs::path base = fs::path(cmd.out_dir) / stem;
    write_feature_file(song.features, base.string() + ".sff");
    write_text_file(base.string() + ".sfa",
                    serialize_annotation(song.annotation, cmd.source, cmd.policy));
  }
  write_manifest(cmd.out_dir, "synth", app_config_to_json(cmd.cfg), cmd.seed, {});
}

void cmd_train(const TrainCmd& cmd) {
  const AppConfig& cfg = cmd.cfg;
  if (cfg.train_dir.empty() || cfg.val_dir.empty())
    fail(Errc::config_error, "data.train_dir and data.val_dir are required");
  fs::create_directories(cmd.out_dir);

  CorpusOptions copts;
  copts.fusion = cfg.fusion;
  copts.sources = cfg.sources;
  const MappingProfile* profile = find_builtin_profile(cfg.profile);
  if (!profile) fail(Errc::config_error, "unknown mapping profile: " + cfg.profile);
  copts.profile = profile;
  copts.default_source = resolve_source(cfg.sources, cfg.default_source);

  auto train_set = load_corpus(cfg.train_dir, copts);
  auto val_set = load_corpus(cfg.val_dir, copts);
  if (train_set.empty() || val_set.empty()) fail(Errc::empty_corpus, "train or val directory empty");

  ModelConfig mcfg = cfg.model;
  mcfg.input_dim = train_set.front().features.dim;
  ModelParams params(mcfg);
  params.init_random(cfg.train.seed);

  std::ofstream log((fs::path(cmd.out_dir) / "train_log.txt").string());
  TrainResult result = train(train_set, val_set, cfg.train, std::move(params), &log);

  save_checkpoint((fs::path(cmd.out_dir) / "model.ckpt").string(), result.best_params, cfg.sources);
  json summary;
  summary["best_step"] = result.best_step;
  summary["best_selection_value"] = result.best_selection_value;
  summary["stop_reason"] = result.stop_reason;
  summary["validations"] = json::array();
  for (const auto& v : result.validations)
    summary["validations"].push_back(
        {{"step", v.step}, {"hr05f", v.hr05f}, {"hr3f", v.hr3f}, {"acc", v.acc}});
  write_text_file((fs::path(cmd.out_dir) / "summary.json").string(), summary.dump(2) + "\n");
  write_manifest(cmd.out_dir, "train",
                 cmd.raw_config.is_null() ? app_config_to_json(cfg) : cmd.raw_config,
                 cfg.train.seed, {cfg.train_dir, cfg.val_dir});
}

void cmd_infer(const InferCmd& cmd) {
  LoadedCheckpoint ckpt = load_checkpoint(cmd.checkpoint);
  fs::create_directories(cmd.out_dir);

  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(cmd.features_dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.size() > 4 && name.ends_with(".sff")) {
      const std::size_t dot = name.find('.');
      stems.push_back(name.substr(0, dot));
    }
  }
  std::sort(stems.begin(), stems.end());
  stems.erase(std::unique(stems.begin(), stems.end()), stems.end());
  if (stems.empty()) fail(Errc::missing_pair, "no .sff files in " + cmd.features_dir);

  const std::string source_name =
      cmd.decode.source < ckpt.sources.size() ? ckpt.sources.name(cmd.decode.source) : "HX";
  std::vector<std::string> outputs(stems.size());
  parallel_for(stems.size(), cmd.workers, [&](std::size_t i) {
    const fs::path base = fs::path(cmd.features_dir) / stems[i];
    FeatureTensor feat;
    const std::string bare = base.string() + ".sff";
    if (fs::exists(bare)) {
      feat = read_feature_file(bare);
    } else {
      std::vector<FeatureTensor> owned;
      std::vector<ExtractorPair> pairs;
      owned.reserve(cmd.fusion.extractors.size() * 2);
      for (const auto& ex : cmd.fusion.extractors) {
        ExtractorPair pair;
        const std::string local = base.string() + "." + ex + ".local30.sff";
        const std::string global = base.string() + "." + ex + ".global420.sff";
        if (cmd.fusion.use_local && fs::exists(local)) {
          owned.push_back(read_feature_file(local));
          pair.local = &owned.back();
        }
        if (cmd.fusion.use_global && fs::exists(global)) {
          owned.push_back(read_feature_file(global));
          pair.global = &owned.back();
        }
        pairs.push_back(pair);
      }
      feat = fuse(pairs, cmd.fusion);
    }
    const Annotation ann = infer(feat, ckpt.params, cmd.decode);
    outputs[i] = serialize_annotation(ann, source_name);
  });
  for (std::size_t i = 0; i < stems.size(); ++i)
    write_text_file((fs::path(cmd.out_dir) / (stems[i] + ".sfa")).string(), outputs[i]);
  write_manifest(cmd.out_dir, "infer", json{{"checkpoint", cmd.checkpoint}}, 0,
                 {cmd.checkpoint, cmd.features_dir});
}

MetricReport cmd_eval(const EvalCmd& cmd) {
  const auto ref_stems = annotation_stems(cmd.ref_dir);
  if (ref_stems.empty()) fail(Errc::empty_corpus, "no .sfa files in " + cmd.ref_dir);

  std::vector<Annotation> refs(ref_stems.size());
  std::vector<Annotation> ests(ref_stems.size());
  parallel_for(ref_stems.size(), cmd.workers, [&](std::size_t i) {
    const std::string ref_path = (fs::path(cmd.ref_dir) / (ref_stems[i] + ".sfa")).string();
    const std::string est_path = (fs::path(cmd.est_dir) / (ref_stems[i] + ".sfa")).string();
    if (!fs::exists(est_path)) fail(Errc::missing_pair, "no estimate for stem " + ref_stems[i]);
    refs[i] = parse_annotation(read_text_file(ref_path), 0);
    ests[i] = parse_annotation(read_text_file(est_path), 0);
  });

  std::vector<EvalPair> pairs;
  pairs.reserve(ref_stems.size());
  for (std::size_t i = 0; i < ref_stems.size(); ++i)
    pairs.push_back(EvalPair{ref_stems[i], &refs[i], &ests[i]});
  MetricReport report = evaluate_corpus(pairs);

  const std::string report_path = cmd.report_path.empty()
                                      ? (fs::path(cmd.est_dir) / "report.txt").string()
                                      : cmd.report_path;
  write_text_file(report_path, format_report(report));
  return report;
}

void cmd_targets(const TargetsCmd& cmd) {
  const Annotation ann = parse_annotation(read_text_file(cmd.annotation), 0);
  const FrameGrid grid = make_grid(ann.end, cmd.frame_rate);
  const FrameTargets t = make_targets(ann, grid, MaskPolicy::full, cmd.half_width);
  std::string out = "frame\ttime\tboundary\tfunction\n";
  char buf[128];
  for (std::size_t i = 0; i < grid.num_frames; ++i) {
    std::snprintf(buf, sizeof(buf), "%zu\t%.3f\t%.6f\t%d\n", i, grid.frame_time(i), t.boundary[i],
                  t.function[i]);
    out += buf;
  }
  write_text_file(cmd.out_path, out);
}

void cmd_convert(const ConvertCmd& cmd) {
  if (!cmd.assemble_chunks.empty()) {
    std::vector<FeatureTensor> chunks;
    chunks.reserve(cmd.assemble_chunks.size());
    for (const auto& p : cmd.assemble_chunks) chunks.push_back(read_feature_file(p));
    write_feature_file(assemble_local(chunks), cmd.output);
    return;
  }
  if (cmd.input.ends_with(".sff")) {
    const FeatureTensor t = read_feature_file(cmd.input);
    std::string out;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "# frames=%zu dim=%zu rate=%.6f\n", t.frames, t.dim,
                  t.frame_rate);
    out += buf;
    for (std::size_t i = 0; i < t.frames; ++i) {
      for (std::size_t d = 0; d < t.dim; ++d) {
        std::snprintf(buf, sizeof(buf), d + 1 < t.dim ? "%g\t" : "%g\n", t.at(i, d));
        out += buf;
      }
    }
    write_text_file(cmd.output, out);
    return;
  }
  if (cmd.input.ends_with(".sfa")) {
    SfaMeta meta;
    const Annotation ann = parse_annotation(read_text_file(cmd.input), 0, default_profile(), &meta);
    write_text_file(cmd.output,
                    serialize_annotation(ann, meta.source_name.value_or(""), meta.policy));
    return;
  }
  fail(Errc::config_error, "cannot convert " + cmd.input);
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::config_error:         return 2;
    case Errc::io_failure:           return 3;
    case Errc::malformed_line:
    case Errc::non_monotonic_times:
    case Errc::missing_end:
    case Errc::unmapped_label:       return 4;
    case Errc::bad_magic:
    case Errc::truncated_file:
    case Errc::dimension_overflow:   return 5;
    case Errc::mismatched_dims:
    case Errc::nothing_to_fuse:      return 6;
    case Errc::input_too_short:
    case Errc::unknown_source:
    case Errc::length_mismatch:
    case Errc::bad_class_index:
    case Errc::too_short:
    case Errc::non_positive_duration:
    case Errc::missing_valid_ranges: return 7;
    case Errc::empty_corpus:         return 8;
    case Errc::non_finite_loss:      return 9;
    case Errc::missing_pair:         return 10;
  }
  return 1;
}

}  // namespace songseg
