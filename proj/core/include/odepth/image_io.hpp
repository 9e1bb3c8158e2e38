#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "odepth/image.hpp"

namespace odepth {

enum class IoErrc {
  kUnreadable,
  kMalformedHeader,
  kUnsupportedFormat,
  kMalformedPayload,
  kWriteFailed,
};

const char* to_string(IoErrc code);

class IoError : public std::runtime_error {
 public:
  IoError(IoErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  IoErrc code() const { return code_; }

 private:
  IoErrc code_;
};

/// Reads a binary PGM (P5), binary PPM (P6) or PFM (Pf/PF) file. Integer
/// formats are divided by maxval; PFM samples must already lie in [0,1].
Image load_image(const std::filesystem::path& path);

/// Writes P5 for one channel, P6 for three. Samples are rounded to 8 bits.
void save_pnm(const Image& image, const std::filesystem::path& path);

/// Single-channel little-endian PFM. Invalid pixels are written as -inf and
/// restored to the mask on load. Values are stored as float32, so only
/// float-representable values round-trip bit-exactly.
void save_pfm(const DepthMap& map, const std::filesystem::path& path);
DepthMap load_pfm(const std::filesystem::path& path, DepthRole role = DepthRole::kDepth);

}  // namespace odepth
