#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "odepth/augment.hpp"
#include "odepth/binning.hpp"
#include "odepth/image.hpp"
#include "odepth/losses.hpp"
#include "odepth/metrics.hpp"
#include "odepth/network.hpp"
#include "odepth/ordinal.hpp"

namespace odepth {

/// Step schedule: the learning rate is multiplied by decay_factor at every
/// iteration listed in decay_at.
struct TrainSchedule {
  int batch_size = 4;
  double learning_rate = 1e-3;
  int iterations = 500;
  std::vector<int> decay_at;
  double decay_factor = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;

  double lr_at(int iteration) const;
};

void validate(const TrainSchedule& s);

struct LogEntry {
  int iter = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TrainOptions {
  TrainSchedule schedule;
  AugmentConfig augment;
  std::uint64_t seed = 0;
  int start_iteration = 0;  ///< resume point; iterations before it are skipped
  std::function<void(const LogEntry&)> on_iteration;
};

/// Image with stereo-derived disparity. Fixed `pairs` (full-resolution
/// coordinates) are used when present and follow the augmentation geometry;
/// otherwise pairs are drawn from the (augmented) disparity every time the
/// sample is visited.
struct RankingSample {
  Image image;
  DepthMap disparity;
  std::vector<OrdinalPair> pairs;
};

struct DepthSample {
  Image image;
  DepthMap depth;  ///< metric, depth role
};

/// Ordinal pretraining with the ranking loss (raw sum over pairs). Swaps in a
/// ranking head if the network has another one.
std::vector<LogEntry> pretrain_ranking(Network& net, std::span<const RankingSample> data,
                                       const PairSampleConfig& pair_cfg, const TrainOptions& opt,
                                       PairReduction reduction = PairReduction::kSum);

/// Metric finetuning as B-way classification with the information-gain loss.
/// A fresh B-channel head replaces any other head; the trunk is kept and every
/// layer is optimised.
std::vector<LogEntry> finetune_classification(Network& net, std::span<const DepthSample> data,
                                              const BinningScheme& scheme, const InfoGainMatrix& h,
                                              const TrainOptions& opt);

/// L2 regression on log depth, the baseline for the classification head.
std::vector<LogEntry> train_regression(Network& net, std::span<const DepthSample> data, const TrainOptions& opt);

/// Output-grid targets: per stride x stride cell, the most frequent label
/// (ties to the smaller) among valid pixels; cells with under half their
/// pixels valid are masked.
LabelMap downsample_labels(const DepthMap& depth, const BinningScheme& scheme, int stride);
/// Per-cell mean log depth with the same validity rule.
DepthMap downsample_log_depth(const DepthMap& depth, int stride);

/// Pooled metrics of `net` over a dataset.
MetricsReport evaluate_network(Network& net, std::span<const DepthSample> data, const BinningScheme* scheme);

}  // namespace odepth
