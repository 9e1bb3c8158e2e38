#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "odepth/image.hpp"

namespace odepth {

/// A fronto-parallel layered random-dot scene. Layer 0 is a full-frame
/// background; later layers are axis-aligned rectangles. Layers are painted in
/// ascending disparity order so nearer layers occlude farther ones.
struct SynthSceneSpec {
  int width = 64;
  int height = 64;
  int channels = 3;
  std::vector<int> layer_disparities{1};
  int search_range = 16;  ///< disparity levels; every layer disparity must be below this
  double texture_density = 0.6;
  std::uint64_t seed = 0;
};

void validate(const SynthSceneSpec& spec);

struct Stereogram {
  Image left;
  Image right;
  DepthMap disparity;  ///< ground truth, left image as reference
};

/// Renders the scene. Occluded and out-of-frame pixels are masked invalid in
/// the disparity ground truth. Output samples are multiples of 1/255 so they
/// survive an 8-bit PNM round trip unchanged.
Stereogram generate_stereogram(const SynthSceneSpec& spec);

/// Base colour of a layer at the given disparity. Monotone in disparity, which
/// is the only monocular depth cue the synthetic scenes carry.
std::array<double, 3> layer_tint(int disparity, int search_range);

}  // namespace odepth
