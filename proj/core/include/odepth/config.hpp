#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "odepth/augment.hpp"
#include "odepth/network.hpp"
#include "odepth/ordinal.hpp"
#include "odepth/stereo.hpp"
#include "odepth/trainer.hpp"

namespace odepth {

/// Bad configuration or command-line input. Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SynthSection {
  int scenes = 8;
  int width = 64;
  int height = 64;
  int channels = 3;
  int layers = 3;  ///< background plus layers-1 rectangles, distinct disparities
  int disparity_min = 1;
  int disparity_max = 8;
  int search_range = 16;
  double texture_density = 0.6;
  double focal_baseline = 16.0;  ///< depth = focal_baseline / disparity
};

struct PairsSection {
  int count = 1000;
  double equal_threshold = 1.0;
  bool resample = false;  ///< draw fresh pairs from disparity at every visit instead of the CSV sets
  PairReduction reduction = PairReduction::kSum;  ///< "mean" divides the ranking loss by the pair count
};

struct BinsSection {
  std::optional<double> d_min;  ///< smallest valid training depth when unset
  double d_max = 80.0;
  int count = 50;
  std::optional<double> alpha = 0.2;  ///< unset: identity matrix (plain cross-entropy)
};

struct StageSection {
  TrainSchedule schedule;
  AugmentConfig augment;
};

struct TrainSection {
  NetConfig net;
  StageSection pretrain;
  StageSection finetune;
  HeadMode finetune_head = HeadMode::kClassification;
};

struct EvalSection {
  int whdr_pairs = 1000;
  double whdr_threshold = 0.0;
  bool strict_pairs_only = true;
};

struct PathsSection {
  std::filesystem::path out;
  std::filesystem::path in;
  std::filesystem::path data;
  std::filesystem::path disparity;
  std::filesystem::path pairs;
  std::filesystem::path model;
  std::filesystem::path pred;
  std::filesystem::path resume;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  SynthSection synth;
  StereoConfig sgm;
  PairsSection pairs;
  BinsSection bins;
  TrainSection train;
  EvalSection eval;
  PathsSection paths;
};

/// Parses JSON text. Unknown keys, wrong types and values that break a
/// module precondition throw ConfigError.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::filesystem::path& path);
void validate(const PipelineConfig& cfg);
std::string config_to_json(const PipelineConfig& cfg);

/// Seeds for independent streams derived from the global seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

}  // namespace odepth
