#include "odepth/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "json_util.hpp"
#include "odepth/image_io.hpp"

namespace odepth {

namespace {

constexpr char kMagic[4] = {'O', 'D', 'C', 'K'};

struct NamedTensor {
  std::string name;
  std::string kind;
  Tensor* tensor;
};

std::vector<NamedTensor> enumerate(Network& net) {
  std::vector<NamedTensor> out;
  for (Parameter* p : net.parameters()) {
    out.push_back({p->name, "param", &p->value});
    out.push_back({p->name + ".velocity", "velocity", &p->velocity});
  }
  for (const Buffer& b : net.buffers()) out.push_back({b.name, "buffer", b.tensor});
  return out;
}

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const std::vector<char>& in, std::size_t& pos, const std::filesystem::path& path) {
  if (pos + sizeof(T) > in.size()) throw IoError(IoErrc::kMalformedPayload, "truncated checkpoint: " + path.string());
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

}  // namespace

void save_checkpoint(Network& net, const CheckpointMeta& meta, const std::filesystem::path& path) {
  detail::Json manifest;
  manifest["format"] = "odepth-checkpoint";
  manifest["version"] = kCheckpointVersion;
  manifest["net"] = detail::to_json(net.config());
  manifest["config_hash"] = hex64(net.config_hash());
  manifest["meta"] = {{"stage", meta.stage},
                      {"iterations_done", meta.iterations_done},
                      {"seed", meta.seed},
                      {"bin_d_min", meta.bin_d_min},
                      {"bin_d_max", meta.bin_d_max}};
  detail::Json table = detail::Json::array();
  std::string payload;
  for (const NamedTensor& t : enumerate(net)) {
    table.push_back({{"name", t.name},
                     {"kind", t.kind},
                     {"shape", t.tensor->shape},
                     {"offset", payload.size()}});
    for (double v : t.tensor->values) put_le(payload, v);
  }
  manifest["tensors"] = table;

  const std::string manifest_text = manifest.dump();
  std::string header(kMagic, 4);
  put_le(header, kCheckpointVersion);
  put_le(header, static_cast<std::uint64_t>(manifest_text.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(IoErrc::kWriteFailed, "cannot write checkpoint " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(manifest_text.data(), static_cast<std::streamsize>(manifest_text.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError(IoErrc::kWriteFailed, "cannot write checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrc::kUnreadable, "cannot read checkpoint " + path.string());
  const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError(IoErrc::kUnsupportedFormat, "not an odepth checkpoint: " + path.string());
  }
  std::size_t pos = 4;
  const auto version = get_le<std::uint32_t>(bytes, pos, path);
  if (version != kCheckpointVersion) {
    throw IoError(IoErrc::kUnsupportedFormat, "checkpoint version " + std::to_string(version) + " is not supported");
  }
  const auto manifest_len = get_le<std::uint64_t>(bytes, pos, path);
  if (pos + manifest_len > bytes.size()) throw IoError(IoErrc::kMalformedHeader, "truncated manifest: " + path.string());

  detail::Json manifest;
  try {
    manifest = detail::Json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + manifest_len));
  } catch (const detail::Json::exception& e) {
    throw IoError(IoErrc::kMalformedHeader, std::string("bad checkpoint manifest: ") + e.what());
  }
  const std::size_t payload_start = pos + manifest_len;

  LoadedCheckpoint loaded{Network(detail::net_config_from_json(manifest.at("net"))), {}};
  if (hex64(loaded.net.config_hash()) != manifest.at("config_hash").get<std::string>()) {
    throw IoError(IoErrc::kMalformedHeader, "checkpoint config hash does not match its network config");
  }
  const auto& m = manifest.at("meta");
  loaded.meta.stage = m.at("stage").get<std::string>();
  loaded.meta.iterations_done = m.at("iterations_done").get<int>();
  loaded.meta.seed = m.at("seed").get<std::uint64_t>();
  loaded.meta.bin_d_min = m.at("bin_d_min").get<double>();
  loaded.meta.bin_d_max = m.at("bin_d_max").get<double>();

  const auto tensors = enumerate(loaded.net);
  const auto& table = manifest.at("tensors");
  if (table.size() != tensors.size()) throw IoError(IoErrc::kMalformedHeader, "checkpoint tensor table mismatch");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& entry = table[i];
    Tensor& t = *tensors[i].tensor;
    if (entry.at("name").get<std::string>() != tensors[i].name ||
        entry.at("shape").get<std::array<int, 4>>() != t.shape) {
      throw IoError(IoErrc::kMalformedHeader, "checkpoint tensor '" + entry.at("name").get<std::string>() +
                                                  "' does not match the network");
    }
    std::size_t p = payload_start + entry.at("offset").get<std::size_t>();
    for (double& v : t.values) v = get_le<double>(bytes, p, path);
  }
  return loaded;
}

}  // namespace odepth
