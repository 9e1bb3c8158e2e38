#include "odepth/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <vector>

namespace odepth {

const char* to_string(IoErrc code) {
  switch (code) {
    case IoErrc::kUnreadable: return "unreadable file";
    case IoErrc::kMalformedHeader: return "malformed header";
    case IoErrc::kUnsupportedFormat: return "unsupported format";
    case IoErrc::kMalformedPayload: return "malformed payload";
    case IoErrc::kWriteFailed: return "write failed";
  }
  return "unknown";
}

namespace {

[[noreturn]] void fail(IoErrc code, const std::filesystem::path& path, const std::string& detail = {}) {
  std::string msg = std::string(to_string(code)) + ": " + path.string();
  if (!detail.empty()) msg += " (" + detail + ")";
  throw IoError(code, msg);
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(IoErrc::kUnreadable, path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Cursor over a PNM/PFM header: whitespace-separated tokens, '#' comments.
class HeaderReader {
 public:
  HeaderReader(const std::vector<unsigned char>& bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) out.push_back(static_cast<char>(bytes_[pos_++]));
    if (out.empty()) fail(IoErrc::kMalformedHeader, path_, "unexpected end of header");
    return out;
  }

  long integer() {
    const std::string t = token();
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (end == t.c_str() || *end != '\0') fail(IoErrc::kMalformedHeader, path_, "expected integer, got '" + t + "'");
    return v;
  }

  double real() {
    const std::string t = token();
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0') fail(IoErrc::kMalformedHeader, path_, "expected number, got '" + t + "'");
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail(IoErrc::kMalformedHeader, path_, "missing separator");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

struct PfmHeader {
  int width = 0;
  int height = 0;
  int channels = 0;
  bool little_endian = true;
  std::size_t offset = 0;
};

PfmHeader parse_pfm_header(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  HeaderReader header(bytes, path);
  const std::string magic = header.token();
  PfmHeader h;
  if (magic == "Pf") {
    h.channels = 1;
  } else if (magic == "PF") {
    h.channels = 3;
  } else {
    fail(IoErrc::kUnsupportedFormat, path, "magic '" + magic + "'");
  }
  const long w = header.integer();
  const long ht = header.integer();
  if (w <= 0 || ht <= 0 || w > (1 << 16) || ht > (1 << 16)) fail(IoErrc::kMalformedHeader, path, "bad dimensions");
  const double scale = header.real();
  if (scale == 0.0 || !std::isfinite(scale)) fail(IoErrc::kMalformedHeader, path, "scale must be non-zero");
  h.width = static_cast<int>(w);
  h.height = static_cast<int>(ht);
  h.little_endian = scale < 0.0;
  h.offset = header.payload_offset();
  return h;
}

std::vector<float> read_pfm_samples(const std::vector<unsigned char>& bytes, const PfmHeader& h,
                                    const std::filesystem::path& path) {
  const std::size_t count = static_cast<std::size_t>(h.width) * h.height * h.channels;
  if (bytes.size() - h.offset < count * 4) fail(IoErrc::kMalformedPayload, path, "truncated raster");
  const bool swap = h.little_endian != (std::endian::native == std::endian::little);
  std::vector<float> samples(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, bytes.data() + h.offset + 4 * i, 4);
    if (swap) bits = __builtin_bswap32(bits);
    std::memcpy(&samples[i], &bits, 4);
  }
  return samples;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_all(path);
  if (bytes.size() < 2 || bytes[0] != 'P') fail(IoErrc::kUnsupportedFormat, path, "not a PNM/PFM file");

  if (bytes[1] == 'f' || bytes[1] == 'F') {
    const PfmHeader h = parse_pfm_header(bytes, path);
    const std::vector<float> samples = read_pfm_samples(bytes, h, path);
    Image image(h.width, h.height, h.channels);
    for (int row = 0; row < h.height; ++row) {
      const int y = h.height - 1 - row;  // PFM rasters are stored bottom-up
      for (int x = 0; x < h.width; ++x) {
        for (int c = 0; c < h.channels; ++c) {
          const float v = samples[(static_cast<std::size_t>(row) * h.width + x) * h.channels + c];
          if (!std::isfinite(v) || v < 0.0f || v > 1.0f) fail(IoErrc::kMalformedPayload, path, "sample outside [0,1]");
          image.at(x, y, c) = v;
        }
      }
    }
    return image;
  }

  int channels = 0;
  if (bytes[1] == '5') {
    channels = 1;
  } else if (bytes[1] == '6') {
    channels = 3;
  } else {
    fail(IoErrc::kUnsupportedFormat, path, "only P5, P6 and PFM are supported");
  }

  HeaderReader header(bytes, path);
  header.token();
  const long w = header.integer();
  const long h = header.integer();
  const long maxval = header.integer();
  if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) fail(IoErrc::kMalformedHeader, path, "bad dimensions");
  if (maxval <= 0 || maxval > 65535) fail(IoErrc::kMalformedHeader, path, "bad maxval");
  const std::size_t offset = header.payload_offset();

  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - offset < count * bytes_per_sample) fail(IoErrc::kMalformedPayload, path, "truncated raster");

  Image image(static_cast<int>(w), static_cast<int>(h), channels);
  auto data = image.data();
  for (std::size_t i = 0; i < count; ++i) {
    unsigned v = bytes[offset + i * bytes_per_sample];
    if (bytes_per_sample == 2) v = (v << 8) | bytes[offset + i * 2 + 1];
    if (v > static_cast<unsigned>(maxval)) fail(IoErrc::kMalformedPayload, path, "sample exceeds maxval");
    data[i] = static_cast<double>(v) / static_cast<double>(maxval);
  }
  return image;
}

void save_pnm(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(IoErrc::kWriteFailed, path);
  out << (image.channels() == 1 ? "P5" : "P6") << '\n' << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<unsigned char> raster(image.data().size());
  std::transform(image.data().begin(), image.data().end(), raster.begin(), [](double v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  });
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!out) fail(IoErrc::kWriteFailed, path);
}

void save_pfm(const DepthMap& map, const std::filesystem::path& path) {
  if (map.width() <= 0 || map.height() <= 0) throw InvalidArgument("save_pfm: map dimensions must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(IoErrc::kWriteFailed, path);
  out << "Pf\n" << map.width() << ' ' << map.height() << "\n-1.0\n";
  std::vector<unsigned char> raster(map.pixel_count() * 4);
  std::size_t i = 0;
  for (int row = 0; row < map.height(); ++row) {
    const int y = map.height() - 1 - row;
    for (int x = 0; x < map.width(); ++x, ++i) {
      const float v = map.valid(x, y) ? static_cast<float>(map.at(x, y)) : -std::numeric_limits<float>::infinity();
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      if constexpr (std::endian::native != std::endian::little) bits = __builtin_bswap32(bits);
      std::memcpy(raster.data() + 4 * i, &bits, 4);
    }
  }
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!out) fail(IoErrc::kWriteFailed, path);
}

DepthMap load_pfm(const std::filesystem::path& path, DepthRole role) {
  const std::vector<unsigned char> bytes = read_all(path);
  if (bytes.size() < 2 || bytes[0] != 'P') fail(IoErrc::kUnsupportedFormat, path, "not a PFM file");
  const PfmHeader h = parse_pfm_header(bytes, path);
  if (h.channels != 1) fail(IoErrc::kUnsupportedFormat, path, "depth maps must be single-channel PFM");
  const std::vector<float> samples = read_pfm_samples(bytes, h, path);

  DepthMap map(h.width, h.height, role);
  std::size_t i = 0;
  for (int row = 0; row < h.height; ++row) {
    const int y = h.height - 1 - row;
    for (int x = 0; x < h.width; ++x, ++i) {
      const float v = samples[i];
      if (std::isinf(v) && v < 0.0f) {
        map.at(x, y) = 0.0;
        map.invalidate(x, y);
      } else if (!std::isfinite(v)) {
        fail(IoErrc::kMalformedPayload, path, "non-finite sample");
      } else {
        map.set(x, y, v);
      }
    }
  }
  return map;
}

}  // namespace odepth
