#include "odepth/layers.hpp"

#include <Eigen/Core>
#include <cmath>
#include <sstream>

#include "odepth/image.hpp"

namespace odepth {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

std::string shape_string(const std::array<int, 4>& shape) {
  std::ostringstream out;
  out << '(' << shape[0] << ',' << shape[1] << ',' << shape[2] << ',' << shape[3] << ')';
  return out.str();
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride)
    : in_(in_channels),
      out_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(kernel / 2),
      weight_(name + ".weight", Tensor(out_channels, in_channels, kernel, kernel)),
      bias_(name + ".bias", Tensor(1, out_channels, 1, 1)) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || kernel % 2 == 0 || stride < 1) {
    throw InvalidArgument("Conv2d " + name + ": bad geometry");
  }
}

void Conv2d::init(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / (in_ * k_ * k_)));
  for (double& w : weight_.value.values) w = normal(rng);
  bias_.value.zero();
}

Tensor Conv2d::forward(const Tensor& x) {
  if (x.c() != in_) {
    throw InvalidArgument("Conv2d " + weight_.name + ": expected " + std::to_string(in_) + " input channels, got " +
                          shape_string(x.shape));
  }
  in_shape_ = x.shape;
  const int h = x.h(), w = x.w();
  out_h_ = (h + 2 * pad_ - k_) / stride_ + 1;
  out_w_ = (w + 2 * pad_ - k_) / stride_ + 1;
  if (out_h_ < 1 || out_w_ < 1) throw InvalidArgument("Conv2d " + weight_.name + ": input too small");
  const int rows = in_ * k_ * k_;
  const int cols = out_h_ * out_w_;

  Tensor y(x.n(), out_, out_h_, out_w_);
  cols_.assign(x.n(), {});
  const ConstMatrixMap wmat(weight_.value.values.data(), out_, rows);
  for (int n = 0; n < x.n(); ++n) {
    std::vector<double>& col = cols_[n];
    col.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    const auto xin = x.item(n);
    for (int ci = 0; ci < in_; ++ci) {
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          double* dst = col.data() + static_cast<std::size_t>((ci * k_ + ky) * k_ + kx) * cols;
          for (int oy = 0; oy < out_h_; ++oy) {
            const int iy = oy * stride_ + ky - pad_;
            if (iy < 0 || iy >= h) continue;
            const double* src = xin.data() + (static_cast<std::size_t>(ci) * h + iy) * w;
            for (int ox = 0; ox < out_w_; ++ox) {
              const int ix = ox * stride_ + kx - pad_;
              if (ix >= 0 && ix < w) dst[oy * out_w_ + ox] = src[ix];
            }
          }
        }
      }
    }
    MatrixMap ymat(y.item(n).data(), out_, cols);
    ymat.noalias() = wmat * ConstMatrixMap(col.data(), rows, cols);
    for (int co = 0; co < out_; ++co) ymat.row(co).array() += bias_.value.values[co];
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  if (grad_out.n() != in_shape_[0] || grad_out.c() != out_ || grad_out.h() != out_h_ || grad_out.w() != out_w_) {
    throw InvalidArgument("Conv2d " + weight_.name + ": gradient shape mismatch");
  }
  const int h = in_shape_[2], w = in_shape_[3];
  const int rows = in_ * k_ * k_;
  const int cols = out_h_ * out_w_;
  Tensor dx(in_shape_[0], in_shape_[1], h, w);
  const ConstMatrixMap wmat(weight_.value.values.data(), out_, rows);
  MatrixMap dwmat(weight_.grad.values.data(), out_, rows);
  std::vector<double> dcol(static_cast<std::size_t>(rows) * cols);

  for (int n = 0; n < grad_out.n(); ++n) {
    const ConstMatrixMap g(grad_out.item(n).data(), out_, cols);
    const ConstMatrixMap col(cols_[n].data(), rows, cols);
    dwmat.noalias() += g * col.transpose();
    for (int co = 0; co < out_; ++co) bias_.grad.values[co] += g.row(co).sum();
    MatrixMap dcm(dcol.data(), rows, cols);
    dcm.noalias() = wmat.transpose() * g;

    auto dxin = dx.item(n);
    for (int ci = 0; ci < in_; ++ci) {
      for (int ky = 0; ky < k_; ++ky) {
        for (int kx = 0; kx < k_; ++kx) {
          const double* src = dcol.data() + static_cast<std::size_t>((ci * k_ + ky) * k_ + kx) * cols;
          for (int oy = 0; oy < out_h_; ++oy) {
            const int iy = oy * stride_ + ky - pad_;
            if (iy < 0 || iy >= h) continue;
            double* dst = dxin.data() + (static_cast<std::size_t>(ci) * h + iy) * w;
            for (int ox = 0; ox < out_w_; ++ox) {
              const int ix = ox * stride_ + kx - pad_;
              if (ix >= 0 && ix < w) dst[ix] += src[oy * out_w_ + ox];
            }
          }
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// ReLU

Tensor ReLU::forward(const Tensor& x) {
  Tensor y = x;
  active_.resize(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    active_[i] = y.values[i] > 0.0;
    if (!active_[i]) y.values[i] = 0.0;
  }
  return y;
}

Tensor ReLU::backward(const Tensor& grad_out) const {
  if (grad_out.size() != active_.size()) throw InvalidArgument("ReLU: gradient shape mismatch");
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!active_[i]) dx.values[i] = 0.0;
  }
  return dx;
}

// ---------------------------------------------------------------------------
// MaxPool2

Tensor MaxPool2::forward(const Tensor& x) {
  if (x.h() % 2 != 0 || x.w() % 2 != 0) {
    throw InvalidArgument("MaxPool2: spatial size " + shape_string(x.shape) + " is not even");
  }
  in_shape_ = x.shape;
  const int oh = x.h() / 2, ow = x.w() / 2;
  Tensor y(x.n(), x.c(), oh, ow);
  argmax_.resize(y.size());
  std::size_t o = 0;
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++o) {
          std::size_t best = 0;
          double best_v = -INFINITY;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx = ((static_cast<std::size_t>(n) * x.c() + c) * x.h() + 2 * oy + dy) * x.w() + 2 * ox + dx;
              if (x.values[idx] > best_v) {
                best_v = x.values[idx];
                best = idx;
              }
            }
          }
          y.values[o] = best_v;
          argmax_[o] = best;
        }
      }
    }
  }
  return y;
}

Tensor MaxPool2::backward(const Tensor& grad_out) const {
  if (grad_out.size() != argmax_.size()) throw InvalidArgument("MaxPool2: gradient shape mismatch");
  Tensor dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
  for (std::size_t o = 0; o < argmax_.size(); ++o) dx.values[argmax_[o]] += grad_out.values[o];
  return dx;
}

// ---------------------------------------------------------------------------
// ChannelNorm

ChannelNorm::ChannelNorm(std::string name, int channels)
    : channels_(channels),
      name_(std::move(name)),
      gamma_(name_ + ".gamma", Tensor(1, channels, 1, 1, 1.0)),
      beta_(name_ + ".beta", Tensor(1, channels, 1, 1, 0.0)),
      mean_(1, channels, 1, 1, 0.0),
      var_(1, channels, 1, 1, 1.0),
      calibrated_(1, 1, 1, 1, 0.0) {}

void ChannelNorm::collect_buffers(std::vector<Buffer>& buffers) {
  buffers.push_back({name_ + ".mean", &mean_});
  buffers.push_back({name_ + ".var", &var_});
  buffers.push_back({name_ + ".calibrated", &calibrated_});
}

void ChannelNorm::calibrate(const Tensor& x) {
  const std::size_t plane = x.plane();
  const double count = static_cast<double>(plane) * x.n();
  for (int c = 0; c < channels_; ++c) {
    double sum = 0.0;
    for (int n = 0; n < x.n(); ++n) {
      const double* p = x.values.data() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    }
    const double mean = sum / count;
    double sq = 0.0;
    for (int n = 0; n < x.n(); ++n) {
      const double* p = x.values.data() + (static_cast<std::size_t>(n) * channels_ + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
    }
    mean_.values[c] = mean;
    var_.values[c] = sq / count;
  }
  calibrated_.values[0] = 1.0;
}

Tensor ChannelNorm::forward(const Tensor& x) {
  if (x.c() != channels_) throw InvalidArgument("ChannelNorm " + name_ + ": channel mismatch");
  if (!calibrated()) calibrate(x);
  const std::size_t plane = x.plane();
  normalized_ = x;
  Tensor y(x.n(), x.c(), x.h(), x.w());
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < channels_; ++c) {
      const double inv_std = 1.0 / std::sqrt(var_.values[c] + kEps);
      const double g = gamma_.value.values[c];
      const double b = beta_.value.values[c];
      const std::size_t off = (static_cast<std::size_t>(n) * channels_ + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double xhat = (x.values[off + i] - mean_.values[c]) * inv_std;
        normalized_.values[off + i] = xhat;
        y.values[off + i] = g * xhat + b;
      }
    }
  }
  return y;
}

Tensor ChannelNorm::backward(const Tensor& grad_out) {
  if (!grad_out.same_shape(normalized_)) throw InvalidArgument("ChannelNorm " + name_ + ": gradient shape mismatch");
  const std::size_t plane = grad_out.plane();
  Tensor dx(grad_out.n(), grad_out.c(), grad_out.h(), grad_out.w());
  for (int n = 0; n < grad_out.n(); ++n) {
    for (int c = 0; c < channels_; ++c) {
      const double inv_std = 1.0 / std::sqrt(var_.values[c] + kEps);
      const double g = gamma_.value.values[c];
      const std::size_t off = (static_cast<std::size_t>(n) * channels_ + c) * plane;
      double dgamma = 0.0, dbeta = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        const double dy = grad_out.values[off + i];
        dgamma += dy * normalized_.values[off + i];
        dbeta += dy;
        dx.values[off + i] = dy * g * inv_std;
      }
      gamma_.grad.values[c] += dgamma;
      beta_.grad.values[c] += dbeta;
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// ResidualBlock

ResidualBlock::ResidualBlock(const std::string& name, int in_channels, int out_channels, int stride)
    : norm1_(name + ".norm1", in_channels),
      conv1_(name + ".conv1", in_channels, out_channels, 3, stride),
      norm2_(name + ".norm2", out_channels),
      conv2_(name + ".conv2", out_channels, out_channels, 3, 1) {
  if (in_channels != out_channels || stride != 1) {
    projection_ = std::make_unique<Conv2d>(name + ".proj", in_channels, out_channels, 1, stride);
  }
}

void ResidualBlock::init(std::mt19937_64& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
  if (projection_) projection_->init(rng);
}

Tensor ResidualBlock::forward(const Tensor& x) {
  Tensor f = conv2_.forward(relu2_.forward(norm2_.forward(conv1_.forward(relu1_.forward(norm1_.forward(x))))));
  const Tensor shortcut = projection_ ? projection_->forward(x) : x;
  if (!f.same_shape(shortcut)) throw InvalidArgument("ResidualBlock: branch shapes differ");
  for (std::size_t i = 0; i < f.size(); ++i) f.values[i] += shortcut.values[i];
  return f;
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
  Tensor dx = norm1_.backward(relu1_.backward(conv1_.backward(norm2_.backward(relu2_.backward(conv2_.backward(grad_out))))));
  const Tensor dshort = projection_ ? projection_->backward(grad_out) : grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) dx.values[i] += dshort.values[i];
  return dx;
}

void ResidualBlock::collect(std::vector<Parameter*>& params) {
  norm1_.collect(params);
  conv1_.collect(params);
  norm2_.collect(params);
  conv2_.collect(params);
  if (projection_) projection_->collect(params);
}

void ResidualBlock::collect_buffers(std::vector<Buffer>& buffers) {
  norm1_.collect_buffers(buffers);
  norm2_.collect_buffers(buffers);
}

void ResidualBlock::reset_calibration() {
  norm1_.reset_calibration();
  norm2_.reset_calibration();
}

}  // namespace odepth
