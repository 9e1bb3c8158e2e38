#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "odepth/image.hpp"

namespace odepth {

/// Standard monocular depth measures over T pooled pixels. The raw sums are
/// kept so reports from different images pool exactly.
struct MetricsReport {
  double rms = 0.0;
  double rel = 0.0;
  double log10 = 0.0;
  double rmslog = 0.0;  ///< natural log
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t count = 0;

  struct Sums {
    double sq_err = 0.0;
    double rel_err = 0.0;
    double log10_err = 0.0;
    double sq_log_err = 0.0;
    std::size_t within[3] = {0, 0, 0};
  } sums;

  std::string to_json() const;
  /// rms,rel,log10,rmslog,delta1,delta2,delta3,count
  std::string to_csv_row() const;
  static std::string csv_header();
};

/// Evaluates pixels valid in pred, gt and `extra_mask` (empty = no extra mask).
/// Throws if no pixel qualifies or a valid pixel is non-positive.
MetricsReport evaluate(const DepthMap& pred, const DepthMap& gt, std::span<const std::uint8_t> extra_mask = {});

/// Pools reports as if all their pixels had been evaluated together.
MetricsReport aggregate(std::span<const MetricsReport> reports);

}  // namespace odepth
