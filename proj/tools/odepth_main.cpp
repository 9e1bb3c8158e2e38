#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "odepth/config.hpp"
#include "odepth/image_io.hpp"
#include "odepth/pipeline.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out, in, data, disparity, pairs, model, pred, resume;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON pipeline config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "global seed (overrides the config)");
  cmd->add_option("--out", f.out, "output directory");
}

odepth::PipelineConfig resolve(const Flags& f) {
  odepth::PipelineConfig cfg = f.config.empty() ? odepth::parse_config("{}") : odepth::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  auto set = [](std::filesystem::path& dst, const std::string& src) {
    if (!src.empty()) dst = src;
  };
  set(cfg.paths.out, f.out);
  set(cfg.paths.in, f.in);
  set(cfg.paths.data, f.data);
  set(cfg.paths.disparity, f.disparity);
  set(cfg.paths.pairs, f.pairs);
  set(cfg.paths.model, f.model);
  set(cfg.paths.pred, f.pred);
  set(cfg.paths.resume, f.resume);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ordinal-pretrained monocular depth: synthetic data, stereo, training and evaluation"};
  app.require_subcommand(1);
  Flags f;

  auto* synth = app.add_subcommand("synth", "render a synthetic stereo dataset");
  add_common(synth, f);

  auto* stereo = app.add_subcommand("stereo", "SGM disparity for every scene of a dataset");
  add_common(stereo, f);
  stereo->add_option("--in", f.in, "dataset directory")->required();

  auto* pairs = app.add_subcommand("pairs", "sample ordinal pairs from disparity maps");
  add_common(pairs, f);
  pairs->add_option("--in", f.in, "disparity directory")->required();

  auto* pretrain = app.add_subcommand("pretrain", "ordinal pretraining with the ranking loss");
  add_common(pretrain, f);
  pretrain->add_option("--data", f.data, "dataset directory")->required();
  pretrain->add_option("--pairs", f.pairs, "pair directory");
  pretrain->add_option("--disparity", f.disparity, "disparity directory (pair resampling)");
  pretrain->add_option("--resume", f.resume, "continue from a pretrain checkpoint");

  auto* finetune = app.add_subcommand("finetune", "metric finetuning");
  add_common(finetune, f);
  finetune->add_option("--data", f.data, "dataset directory")->required();
  finetune->add_option("--model", f.model, "pretrained checkpoint (omit to train from scratch)");
  finetune->add_option("--resume", f.resume, "continue from a finetune checkpoint");

  auto* eval = app.add_subcommand("eval", "depth metrics against ground truth");
  add_common(eval, f);
  eval->add_option("--data", f.data, "dataset directory")->required();
  eval->add_option("--model", f.model, "metric checkpoint");
  eval->add_option("--pred", f.pred, "directory of <scene>.pfm depth predictions");

  auto* whdr = app.add_subcommand("whdr", "ordinal disagreement rate of a model");
  add_common(whdr, f);
  whdr->add_option("--data", f.data, "dataset directory")->required();
  whdr->add_option("--model", f.model, "checkpoint")->required();
  whdr->add_option("--pairs", f.pairs, "pair directory (default: pairs drawn from ground truth)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    const odepth::PipelineConfig cfg = resolve(f);
    if (synth->parsed()) {
      odepth::cmd_synth(cfg);
    } else if (stereo->parsed()) {
      odepth::cmd_stereo(cfg);
    } else if (pairs->parsed()) {
      odepth::cmd_pairs(cfg);
    } else if (pretrain->parsed()) {
      odepth::cmd_pretrain(cfg);
    } else if (finetune->parsed()) {
      odepth::cmd_finetune(cfg);
    } else if (eval->parsed()) {
      std::cout << odepth::cmd_eval(cfg).to_json() << '\n';
    } else if (whdr->parsed()) {
      std::cout << "whdr " << odepth::cmd_whdr(cfg) << '\n';
    }
  } catch (const odepth::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
