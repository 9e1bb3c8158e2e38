#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "odepth/tensor.hpp"

namespace odepth {

/// Non-trainable state that still has to survive a checkpoint.
struct Buffer {
  std::string name;
  Tensor* tensor;
};

/// Square-kernel convolution with zero padding k/2 and a bias.
class Conv2d {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride);

  Tensor forward(const Tensor& x);
  /// Accumulates parameter gradients and returns dL/dx.
  Tensor backward(const Tensor& grad_out);

  /// He-normal weights, zero bias.
  void init(std::mt19937_64& rng);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  int kernel() const { return k_; }
  int stride() const { return stride_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  void collect(std::vector<Parameter*>& params) {
    params.push_back(&weight_);
    params.push_back(&bias_);
  }

 private:
  int in_, out_, k_, stride_, pad_;
  Parameter weight_;  // (out, in, k, k)
  Parameter bias_;    // (1, out, 1, 1)
  std::array<int, 4> in_shape_{};
  int out_h_ = 0, out_w_ = 0;
  std::vector<std::vector<double>> cols_;  // im2col per batch item
};

class ReLU {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out) const;

 private:
  std::vector<unsigned char> active_;
};

/// 2x2 max pooling with stride 2; ties go to the first element in scan order.
class MaxPool2 {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out) const;

 private:
  std::array<int, 4> in_shape_{};
  std::vector<std::size_t> argmax_;
};

/// Per-channel affine normalisation with frozen statistics:
/// y = gamma (x - mean) / sqrt(var + eps) + beta. Statistics are measured on
/// the first input seen (or an explicit calibration batch) and then fixed.
class ChannelNorm {
 public:
  ChannelNorm(std::string name, int channels);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);

  bool calibrated() const { return calibrated_.values[0] != 0.0; }
  void reset_calibration() { calibrated_.values[0] = 0.0; }
  void collect(std::vector<Parameter*>& params) {
    params.push_back(&gamma_);
    params.push_back(&beta_);
  }
  void collect_buffers(std::vector<Buffer>& buffers);

  static constexpr double kEps = 1e-5;

 private:
  void calibrate(const Tensor& x);

  int channels_;
  std::string name_;
  Parameter gamma_;
  Parameter beta_;
  Tensor mean_;        // (1, C, 1, 1)
  Tensor var_;         // (1, C, 1, 1)
  Tensor calibrated_;  // (1, 1, 1, 1) flag, stored so checkpoints carry it
  Tensor normalized_;
};

/// Pre-activation residual unit: y = F(x) + x, or F(x) + W_s x when the
/// channel count or stride changes. F = conv(relu(norm(conv(relu(norm(x)))))).
class ResidualBlock {
 public:
  ResidualBlock(const std::string& name, int in_channels, int out_channels, int stride);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);

  void init(std::mt19937_64& rng);
  bool has_projection() const { return projection_ != nullptr; }
  Conv2d& conv1() { return conv1_; }
  Conv2d& conv2() { return conv2_; }
  Conv2d* projection() { return projection_.get(); }
  ChannelNorm& norm1() { return norm1_; }
  ChannelNorm& norm2() { return norm2_; }

  void collect(std::vector<Parameter*>& params);
  void collect_buffers(std::vector<Buffer>& buffers);
  void reset_calibration();

 private:
  ChannelNorm norm1_;
  ReLU relu1_;
  Conv2d conv1_;
  ChannelNorm norm2_;
  ReLU relu2_;
  Conv2d conv2_;
  std::unique_ptr<Conv2d> projection_;
};

}  // namespace odepth
