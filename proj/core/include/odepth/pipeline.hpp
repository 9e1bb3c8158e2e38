#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "odepth/config.hpp"
#include "odepth/metrics.hpp"

namespace odepth {

/// Failure while doing the work (I/O, a failed scene). Maps to exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SceneRecord {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<int> layer_disparities;
};

/// A synthetic dataset directory: manifest.json plus one sub-directory per
/// scene holding left.ppm, right.ppm and gt.pfm (metric depth).
struct Dataset {
  std::filesystem::path root;
  double focal_baseline = 0.0;
  std::vector<SceneRecord> scenes;

  std::filesystem::path left(std::size_t i) const { return root / scenes[i].name / "left.ppm"; }
  std::filesystem::path right(std::size_t i) const { return root / scenes[i].name / "right.ppm"; }
  std::filesystem::path gt(std::size_t i) const { return root / scenes[i].name / "gt.pfm"; }
};

Dataset load_dataset(const std::filesystem::path& dir);

/// Each command reads its inputs from cfg.paths and writes under
/// cfg.paths.out. Inputs are checked before the output directory is created.
void cmd_synth(const PipelineConfig& cfg);
/// paths.in: dataset. Writes <name>.pfm disparity maps.
void cmd_stereo(const PipelineConfig& cfg);
/// paths.in: disparity directory. Writes <name>.csv pair sets.
void cmd_pairs(const PipelineConfig& cfg);
/// paths.data + paths.pairs (or paths.disparity when pairs are resampled).
/// Writes model.ckpt and train_log.jsonl; paths.resume continues a run.
void cmd_pretrain(const PipelineConfig& cfg);
/// paths.data, optional paths.model (pretrained trunk) or paths.resume.
void cmd_finetune(const PipelineConfig& cfg);
/// paths.data against paths.model or paths.pred (<name>.pfm depth maps).
/// Writes metrics.json (pooled) and metrics.csv (per scene plus pooled).
MetricsReport cmd_eval(const PipelineConfig& cfg);
/// WHDR of paths.model on paths.data, using pair sets from paths.pairs or
/// pairs drawn from the ground truth. Writes whdr.json.
double cmd_whdr(const PipelineConfig& cfg);

}  // namespace odepth
