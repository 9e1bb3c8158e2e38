#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "odepth/binning.hpp"
#include "odepth/image.hpp"
#include "odepth/layers.hpp"
#include "odepth/losses.hpp"
#include "odepth/tensor.hpp"

namespace odepth {

enum class HeadMode {
  kRanking,         ///< one channel of relative closeness
  kClassification,  ///< B logits over log-depth bins
  kRegression,      ///< one channel of log depth (L2 baseline)
};

const char* to_string(HeadMode mode);
HeadMode head_mode_from_string(const std::string& s);

struct NetConfig {
  int in_channels = 3;
  std::vector<int> widths{16, 32, 64};
  int blocks_per_stage = 2;
  std::vector<int> stage_strides{1, 2, 2};
  bool stem_pool = true;
  std::vector<int> fc_widths{128, 64};
  HeadMode head = HeadMode::kRanking;
  int bins = 1;  ///< head channels in classification mode
  std::uint64_t seed = 0;

  int head_channels() const { return head == HeadMode::kClassification ? bins : 1; }
  int total_stride() const;
};

void validate(const NetConfig& cfg);

/// Stem conv (+ optional 2x2 max pool), residual stages, norm + ReLU, two
/// 1x1 conv layers with ReLU, and a 1x1 head. Everything but the head is the
/// trunk that survives a head swap.
class Network {
 public:
  explicit Network(const NetConfig& cfg);

  Network(Network&&) noexcept;
  Network& operator=(Network&&) noexcept;
  ~Network();

  const NetConfig& config() const { return config_; }

  Tensor forward(const Tensor& x);
  /// Backpropagates dL/d(output), accumulating into every parameter's grad.
  void backward(const Tensor& grad_out);

  /// Replaces the head with a freshly initialised one for `mode`. The trunk
  /// keeps its weights and normalisation statistics.
  void replace_head(HeadMode mode, int bins, std::uint64_t seed);

  /// Re-measures normalisation statistics on `x` (all layers, in order).
  void calibrate(const Tensor& x);
  bool calibrated() const;

  std::vector<Parameter*> parameters();
  std::vector<Buffer> buffers();
  void zero_grad();

  std::vector<ResidualBlock*> blocks();

  /// Stable 64-bit hash of the architecture (not the weights).
  std::uint64_t config_hash() const;

 private:
  struct Layers;
  NetConfig config_;
  std::unique_ptr<Layers> layers_;
};

Tensor image_to_tensor(const Image& image);
/// Item `n` of a network output as a score map.
ScoreMap to_score_map(const Tensor& t, int n = 0);
Tensor from_score_gradient(const std::vector<double>& grad, int channels, int height, int width);

/// Bilinear resize of a fully valid map (half-pixel centres, edge clamp).
DepthMap upsample_bilinear(const DepthMap& map, int width, int height);

/// Runs the network on one image (edge-padded to the total stride when needed)
/// and decodes a metric depth map at the input resolution. Classification
/// takes the per-pixel argmax (ties to the smallest label) and the bin centre;
/// regression exponentiates the log-depth output. Decoded maps are upsampled
/// bilinearly.
DepthMap predict_depth(Network& net, const Image& image, const BinningScheme* scheme);

/// Decodes a classification score map at its own resolution.
DepthMap decode_classification(const ScoreMap& logits, const BinningScheme& scheme);

/// Ranking head output as a depth-role map (exp(-z): smaller is closer) at the
/// input resolution, suitable for WHDR scoring.
DepthMap predict_relative(Network& net, const Image& image);

/// Raw score map for one image, padded to the total stride when needed.
ScoreMap run_network(Network& net, const Image& image);

}  // namespace odepth
