#pragma once

// Internal JSON mapping for types shared by the checkpoint and config readers.

#include "json.hpp"
#include "odepth/network.hpp"

namespace odepth::detail {

using Json = nlohmann::ordered_json;

inline Json to_json(const NetConfig& cfg) {
  Json j;
  j["in_channels"] = cfg.in_channels;
  j["widths"] = cfg.widths;
  j["blocks_per_stage"] = cfg.blocks_per_stage;
  j["stage_strides"] = cfg.stage_strides;
  j["stem_pool"] = cfg.stem_pool;
  j["fc_widths"] = cfg.fc_widths;
  j["head"] = to_string(cfg.head);
  j["bins"] = cfg.bins;
  j["seed"] = cfg.seed;
  return j;
}

inline NetConfig net_config_from_json(const Json& j, NetConfig cfg = {}) {
  cfg.in_channels = j.value("in_channels", cfg.in_channels);
  cfg.widths = j.value("widths", cfg.widths);
  cfg.blocks_per_stage = j.value("blocks_per_stage", cfg.blocks_per_stage);
  cfg.stage_strides = j.value("stage_strides", cfg.stage_strides);
  cfg.stem_pool = j.value("stem_pool", cfg.stem_pool);
  cfg.fc_widths = j.value("fc_widths", cfg.fc_widths);
  if (j.contains("head")) cfg.head = head_mode_from_string(j.at("head").get<std::string>());
  cfg.bins = j.value("bins", cfg.bins);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

}  // namespace odepth::detail
