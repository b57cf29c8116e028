// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "songseg/cli.hpp"
#include "songseg/io_util.hpp"
#include "songseg/version.hpp"

using namespace songseg;

namespace {

int env_workers() {
  const char* env = std::getenv("SONGSEG_WORKERS");
  if (!env) return 0;
  return std::atoi(env);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"songseg: music structure analysis on precomputed feature tensors"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (all fields optional)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic corpus");
  SynthCmd synth_cmd;
  synth->add_option("--out", synth_cmd.out_dir, "output directory")->required();
  synth->add_option("-n,--count", synth_cmd.count, "number of tracks");
  synth->add_option("--seed", synth_cmd.seed, "corpus seed");
  synth->add_option("--source", synth_cmd.source, "source tag written to annotations");
  std::string synth_policy = "full";
  synth->add_option("--policy", synth_policy, "mask policy tag (full|hook|gem)");

  // train
  auto* train = app.add_subcommand("train", "train a model from a config file");
  TrainCmd train_cmd;
  train->add_option("--out", train_cmd.out_dir, "checkpoint directory")->required();

  // infer
  auto* infer = app.add_subcommand("infer", "annotate feature files with a checkpoint");
  InferCmd infer_cmd;
  infer_cmd.workers = env_workers();
  infer->add_option("--checkpoint", infer_cmd.checkpoint, "model checkpoint")->required();
  infer->add_option("--features", infer_cmd.features_dir, "directory of .sff files")->required();
  infer->add_option("--out", infer_cmd.out_dir, "output directory for .sfa files")->required();
  infer->add_option("--workers", infer_cmd.workers, "parallel tracks");

  // eval
  auto* eval = app.add_subcommand("eval", "score estimated annotations against references");
  EvalCmd eval_cmd;
  eval_cmd.workers = env_workers();
  eval->add_option("--ref", eval_cmd.ref_dir, "reference .sfa directory")->required();
  eval->add_option("--est", eval_cmd.est_dir, "estimated .sfa directory")->required();
  eval->add_option("--report", eval_cmd.report_path, "report file (default <est>/report.txt)");
  eval->add_option("--workers", eval_cmd.workers, "parallel tracks");

  // targets
  auto* targets = app.add_subcommand("targets", "dump frame targets for one annotation");
  TargetsCmd targets_cmd;
  targets->add_option("--annotation", targets_cmd.annotation, "input .sfa")->required();
  targets->add_option("--out", targets_cmd.out_path, "output text file")->required();
  targets->add_option("--frame-rate", targets_cmd.frame_rate, "grid frame rate");
  targets->add_option("--half-width", targets_cmd.half_width, "boundary kernel half width");

  // convert
  auto* convert = app.add_subcommand("convert", "format utilities");
  ConvertCmd convert_cmd;
  convert->add_option("--in", convert_cmd.input, "input file (.sff dump / .sfa normalize)");
  convert->add_option("--out", convert_cmd.output, "output file")->required();
  convert->add_option("--assemble", convert_cmd.assemble_chunks,
                      "chunk .sff files to concatenate along time");

  CLI11_PARSE(app, argc, argv);

  try {
    AppConfig cfg = load_app_config(config_path);
    if (*synth) {
      auto policy = mask_policy_from_name(synth_policy);
      if (!policy) fail(Errc::config_error, "policy: " + synth_policy);
      synth_cmd.policy = *policy;
      synth_cmd.cfg = cfg;
      cmd_synth(synth_cmd);
    } else if (*train) {
      train_cmd.cfg = cfg;
      if (!config_path.empty())
        train_cmd.raw_config = nlohmann::json::parse(read_text_file(config_path));
      cmd_train(train_cmd);
    } else if (*infer) {
      infer_cmd.decode = cfg.train.decode;
      infer_cmd.fusion = cfg.fusion;
      cmd_infer(infer_cmd);
    } else if (*eval) {
      MetricReport report = cmd_eval(eval_cmd);
      std::printf("tracks=%zu hr05_f=%.6f hr3_f=%.6f acc=%.6f\n", report.tracks.size(),
                  report.mean.hr05.f, report.mean.hr3.f, report.mean.acc);
    } else if (*targets) {
      cmd_targets(targets_cmd);
    } else if (*convert) {
      cmd_convert(convert_cmd);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
