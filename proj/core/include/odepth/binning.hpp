#pragma once

#include <vector>

namespace odepth {

/// Uniform partition of [d_min, d_max] in log10 depth. Labels are 1-based.
class BinningScheme {
 public:
  BinningScheme(double d_min, double d_max, int bins);

  double d_min() const { return d_min_; }
  double d_max() const { return d_max_; }
  int bins() const { return bins_; }
  const std::vector<double>& edges() const { return edges_; }

  /// Label of the bin holding `depth`; bins are right-open except the last,
  /// and depths outside the range clamp to the end bins.
  int depth_to_bin(double depth) const;
  /// Log-space centre (geometric mean of the edges) of a bin.
  double bin_to_depth(int label) const;

  /// Half the log10 width of one bin: the worst-case quantisation error.
  double half_log_width() const;

 private:
  double d_min_;
  double d_max_;
  int bins_;
  double log_min_;
  double log_step_;
  std::vector<double> edges_;
};

inline BinningScheme make_bins(double d_min, double d_max, int bins) { return {d_min, d_max, bins}; }

/// H(p,q) = exp(-alpha (p - q)^2), row-major B x B.
class InfoGainMatrix {
 public:
  InfoGainMatrix(int bins, double alpha);

  int bins() const { return bins_; }
  double alpha() const { return alpha_; }
  /// 1-based labels to match BinningScheme.
  double operator()(int p, int q) const { return entries_[static_cast<std::size_t>(p - 1) * bins_ + (q - 1)]; }
  /// Sum of row p, i.e. the total weight a pixel with label p distributes.
  double row_sum(int p) const { return row_sums_[p - 1]; }

  static InfoGainMatrix identity(int bins);

 private:
  InfoGainMatrix() = default;

  int bins_ = 0;
  double alpha_ = 0.0;
  std::vector<double> entries_;
  std::vector<double> row_sums_;
};

inline InfoGainMatrix info_gain_matrix(int bins, double alpha) { return {bins, alpha}; }

}  // namespace odepth
