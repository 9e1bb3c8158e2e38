#include "odepth/binning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "odepth/image.hpp"

namespace odepth {

BinningScheme::BinningScheme(double d_min, double d_max, int bins) : d_min_(d_min), d_max_(d_max), bins_(bins) {
  if (!(d_min > 0.0) || !(d_max > d_min) || !std::isfinite(d_max)) {
    throw InvalidArgument("make_bins: need 0 < d_min < d_max");
  }
  if (bins < 2) throw InvalidArgument("make_bins: need at least 2 bins");
  log_min_ = std::log10(d_min);
  log_step_ = (std::log10(d_max) - log_min_) / bins;
  edges_.resize(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) edges_[k] = std::pow(10.0, log_min_ + k * log_step_);
  edges_.front() = d_min;
  edges_.back() = d_max;
}

int BinningScheme::depth_to_bin(double depth) const {
  if (!(depth > 0.0)) throw InvalidArgument("depth_to_bin: depth must be > 0");
  if (depth <= d_min_) return 1;
  if (depth >= d_max_) return bins_;
  // Right-open bins: the label counts the edges at or below depth.
  const auto it = std::upper_bound(edges_.begin(), edges_.end(), depth);
  const int label = static_cast<int>(it - edges_.begin());
  return std::clamp(label, 1, bins_);
}

double BinningScheme::bin_to_depth(int label) const {
  if (label < 1 || label > bins_) {
    throw InvalidArgument("bin_to_depth: label " + std::to_string(label) + " outside [1, " + std::to_string(bins_) + "]");
  }
  return std::pow(10.0, log_min_ + (label - 0.5) * log_step_);
}

double BinningScheme::half_log_width() const { return 0.5 * log_step_; }

InfoGainMatrix::InfoGainMatrix(int bins, double alpha) : bins_(bins), alpha_(alpha) {
  if (bins < 1) throw InvalidArgument("info_gain_matrix: need at least one bin");
  if (!(alpha >= 0.0)) throw InvalidArgument("info_gain_matrix: alpha must be >= 0");
  entries_.resize(static_cast<std::size_t>(bins) * bins);
  row_sums_.assign(bins, 0.0);
  for (int p = 0; p < bins; ++p) {
    for (int q = 0; q < bins; ++q) {
      const double diff = static_cast<double>(p - q);
      entries_[static_cast<std::size_t>(p) * bins + q] = std::exp(-alpha * diff * diff);
    }
    row_sums_[p] = std::accumulate(entries_.begin() + static_cast<std::ptrdiff_t>(p) * bins,
                                   entries_.begin() + static_cast<std::ptrdiff_t>(p + 1) * bins, 0.0);
  }
}

InfoGainMatrix InfoGainMatrix::identity(int bins) {
  if (bins < 1) throw InvalidArgument("info_gain_matrix: need at least one bin");
  InfoGainMatrix h;
  h.bins_ = bins;
  h.alpha_ = INFINITY;
  h.entries_.assign(static_cast<std::size_t>(bins) * bins, 0.0);
  for (int p = 0; p < bins; ++p) h.entries_[static_cast<std::size_t>(p) * bins + p] = 1.0;
  h.row_sums_.assign(bins, 1.0);
  return h;
}

}  // namespace odepth
