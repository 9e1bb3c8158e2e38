#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "odepth/image.hpp"

namespace odepth {

struct PixelCoord {
  int row = 0;
  int col = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// r = +1: i is closer than j; -1: i is farther; 0: roughly equal.
struct OrdinalPair {
  PixelCoord i;
  PixelCoord j;
  int r = 0;
  friend bool operator==(const OrdinalPair&, const OrdinalPair&) = default;
};

struct PairSampleConfig {
  int count = 1000;
  double equal_threshold = 1.0;  ///< in disparity levels
  std::uint64_t seed = 0;
};

void validate(const PairSampleConfig& cfg);

enum class Closeness { kLargerIsCloser, kSmallerIsCloser };

/// 0 when |vi - vj| <= tau, otherwise +1 iff i is closer under `closeness`.
int relation_from_values(double vi, double vj, double tau, Closeness closeness);

/// K distinct-pixel pairs drawn uniformly over valid pixels; relations come from
/// the disparity values (larger is closer). Duplicate pairs are rejected while
/// the valid set has enough distinct pairs to supply K of them.
std::vector<OrdinalPair> sample_pairs(const DepthMap& disparity, const PairSampleConfig& cfg);

/// Fraction of pairs whose relation under `pred` (a depth map, smaller is
/// closer) disagrees with the stored relation. All weights are 1.
double whdr(const DepthMap& pred, std::span<const OrdinalPair> pairs, double pred_threshold = 0.0);

/// `row_i,col_i,row_j,col_j,r`, one pair per line, no header.
void save_pairs_csv(std::span<const OrdinalPair> pairs, const std::filesystem::path& path);
std::vector<OrdinalPair> load_pairs_csv(const std::filesystem::path& path);

}  // namespace odepth
