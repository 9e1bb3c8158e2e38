#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace odepth {

/// Dense NCHW tensor of doubles.
struct Tensor {
  std::array<int, 4> shape{0, 0, 0, 0};
  std::vector<double> values;

  Tensor() = default;
  Tensor(int n, int c, int h, int w, double fill = 0.0)
      : shape{n, c, h, w}, values(static_cast<std::size_t>(n) * c * h * w, fill) {}

  int n() const { return shape[0]; }
  int c() const { return shape[1]; }
  int h() const { return shape[2]; }
  int w() const { return shape[3]; }
  std::size_t size() const { return values.size(); }
  std::size_t item_size() const { return static_cast<std::size_t>(c()) * h() * w(); }
  std::size_t plane() const { return static_cast<std::size_t>(h()) * w(); }

  double& at(int in, int ic, int iy, int ix) { return values[offset(in, ic, iy, ix)]; }
  double at(int in, int ic, int iy, int ix) const { return values[offset(in, ic, iy, ix)]; }

  std::span<double> item(int in) { return {values.data() + in * item_size(), item_size()}; }
  std::span<const double> item(int in) const { return {values.data() + in * item_size(), item_size()}; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  void zero() { std::fill(values.begin(), values.end(), 0.0); }

 private:
  std::size_t offset(int in, int ic, int iy, int ix) const {
    return ((static_cast<std::size_t>(in) * c() + ic) * h() + iy) * w() + ix;
  }
};

std::string shape_string(const std::array<int, 4>& shape);

/// A trainable tensor with its gradient and SGD momentum buffer.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor velocity;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value), velocity(value) {
    grad.zero();
    velocity.zero();
  }
};

}  // namespace odepth
