#include "odepth/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "odepth/synth.hpp"

namespace odepth {

namespace {

using detail::Json;

void check_keys(const Json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.contains(key)) throw ConfigError("config: unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

TrainSchedule read_schedule(const Json& j, const std::string& name, TrainSchedule s) {
  check_keys(j, name, {"batch_size", "lr", "iterations", "decay_at", "decay_factor", "momentum", "weight_decay"});
  read(j, "batch_size", s.batch_size);
  read(j, "lr", s.learning_rate);
  read(j, "iterations", s.iterations);
  read(j, "decay_at", s.decay_at);
  read(j, "decay_factor", s.decay_factor);
  read(j, "momentum", s.momentum);
  read(j, "weight_decay", s.weight_decay);
  return s;
}

AugmentConfig read_augment(const Json& j, const std::string& name, AugmentConfig a) {
  check_keys(j, name, {"scale_lo", "scale_hi", "flip_prob"});
  read(j, "scale_lo", a.scale_lo);
  read(j, "scale_hi", a.scale_hi);
  read(j, "flip_prob", a.flip_prob);
  return a;
}

StageSection read_stage(const Json& j, const std::string& name, StageSection s, TrainSection* train) {
  if (train) {
    check_keys(j, name, {"schedule", "augment", "head"});
    if (j.contains("head")) {
      train->finetune_head = head_mode_from_string(j.at("head").get<std::string>());
    }
  } else {
    check_keys(j, name, {"schedule", "augment"});
  }
  if (j.contains("schedule")) s.schedule = read_schedule(j.at("schedule"), name + ".schedule", s.schedule);
  if (j.contains("augment")) s.augment = read_augment(j.at("augment"), name + ".augment", s.augment);
  return s;
}

std::vector<Direction> read_directions(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "all") return all_directions();
    if (s == "horizontal") return horizontal_directions();
    throw ConfigError("config: sgm.directions must be \"all\", \"horizontal\" or a list of [dx,dy]");
  }
  std::vector<Direction> dirs;
  for (const Json& d : j) {
    const auto v = d.get<std::vector<int>>();
    if (v.size() != 2) throw ConfigError("config: sgm.directions entries must be [dx,dy]");
    dirs.push_back({v[0], v[1]});
  }
  return dirs;
}

Json directions_to_json(const std::vector<Direction>& dirs) {
  if (dirs == all_directions()) return "all";
  if (dirs == horizontal_directions()) return "horizontal";
  Json out = Json::array();
  for (const Direction& d : dirs) out.push_back({d.dx, d.dy});
  return out;
}

PipelineConfig from_json(const Json& root) {
  check_keys(root, "root", {"seed", "synth", "sgm", "pairs", "bins", "train", "eval", "paths"});
  PipelineConfig cfg;
  read(root, "seed", cfg.seed);

  if (root.contains("synth")) {
    const Json& j = root.at("synth");
    check_keys(j, "synth", {"scenes", "width", "height", "channels", "layers", "disparity_min", "disparity_max",
                            "search_range", "texture_density", "focal_baseline"});
    auto& s = cfg.synth;
    read(j, "scenes", s.scenes);
    read(j, "width", s.width);
    read(j, "height", s.height);
    read(j, "channels", s.channels);
    read(j, "layers", s.layers);
    read(j, "disparity_min", s.disparity_min);
    read(j, "disparity_max", s.disparity_max);
    read(j, "search_range", s.search_range);
    read(j, "texture_density", s.texture_density);
    read(j, "focal_baseline", s.focal_baseline);
  }

  // SGM penalties default to the per-channel scaling of the synthetic images.
  cfg.sgm.sgm = SgmParams::defaults(cfg.synth.channels);
  if (root.contains("sgm")) {
    const Json& j = root.at("sgm");
    check_keys(j, "sgm", {"levels", "use_bilsub", "bilsub", "p1", "p2", "directions", "median_radius"});
    read(j, "levels", cfg.sgm.levels);
    read(j, "use_bilsub", cfg.sgm.use_bilsub);
    read(j, "p1", cfg.sgm.sgm.p1);
    read(j, "p2", cfg.sgm.sgm.p2);
    read(j, "median_radius", cfg.sgm.median_radius);
    if (j.contains("directions")) cfg.sgm.sgm.directions = read_directions(j.at("directions"));
    if (j.contains("bilsub")) {
      const Json& b = j.at("bilsub");
      check_keys(b, "sgm.bilsub", {"spatial_sigma", "range_sigma", "radius"});
      read(b, "spatial_sigma", cfg.sgm.bilsub.spatial_sigma);
      read(b, "range_sigma", cfg.sgm.bilsub.range_sigma);
      read(b, "radius", cfg.sgm.bilsub.radius);
    }
  }

  if (root.contains("pairs")) {
    const Json& j = root.at("pairs");
    check_keys(j, "pairs", {"count", "equal_threshold", "resample", "reduction"});
    read(j, "count", cfg.pairs.count);
    read(j, "equal_threshold", cfg.pairs.equal_threshold);
    read(j, "resample", cfg.pairs.resample);
    if (j.contains("reduction")) {
      const std::string r = j.at("reduction").get<std::string>();
      if (r == "sum") {
        cfg.pairs.reduction = PairReduction::kSum;
      } else if (r == "mean") {
        cfg.pairs.reduction = PairReduction::kMean;
      } else {
        throw ConfigError("config: pairs.reduction must be \"sum\" or \"mean\", got \"" + r + "\"");
      }
    }
  }

  if (root.contains("bins")) {
    const Json& j = root.at("bins");
    check_keys(j, "bins", {"d_min", "d_max", "count", "alpha"});
    if (j.contains("d_min") && !j.at("d_min").is_null()) cfg.bins.d_min = j.at("d_min").get<double>();
    read(j, "d_max", cfg.bins.d_max);
    read(j, "count", cfg.bins.count);
    if (j.contains("alpha")) {
      if (j.at("alpha").is_null()) {
        cfg.bins.alpha.reset();
      } else {
        cfg.bins.alpha = j.at("alpha").get<double>();
      }
    }
  }

  if (root.contains("train")) {
    const Json& j = root.at("train");
    check_keys(j, "train", {"net", "pretrain", "finetune"});
    if (j.contains("net")) {
      const Json& n = j.at("net");
      check_keys(n, "train.net", {"in_channels", "widths", "blocks_per_stage", "stage_strides", "stem_pool",
                                  "fc_widths", "seed"});
      cfg.train.net = detail::net_config_from_json(n, cfg.train.net);
    }
    if (j.contains("pretrain")) {
      cfg.train.pretrain = read_stage(j.at("pretrain"), "train.pretrain", cfg.train.pretrain, nullptr);
    }
    if (j.contains("finetune")) {
      cfg.train.finetune = read_stage(j.at("finetune"), "train.finetune", cfg.train.finetune, &cfg.train);
    }
  }

  if (root.contains("eval")) {
    const Json& j = root.at("eval");
    check_keys(j, "eval", {"whdr_pairs", "whdr_threshold", "strict_pairs_only"});
    read(j, "whdr_pairs", cfg.eval.whdr_pairs);
    read(j, "whdr_threshold", cfg.eval.whdr_threshold);
    read(j, "strict_pairs_only", cfg.eval.strict_pairs_only);
  }

  if (root.contains("paths")) {
    const Json& j = root.at("paths");
    check_keys(j, "paths", {"out", "in", "data", "disparity", "pairs", "model", "pred", "resume"});
    auto path = [&](const char* key, std::filesystem::path& out) {
      if (j.contains(key)) out = j.at(key).get<std::string>();
    };
    path("out", cfg.paths.out);
    path("in", cfg.paths.in);
    path("data", cfg.paths.data);
    path("disparity", cfg.paths.disparity);
    path("pairs", cfg.paths.pairs);
    path("model", cfg.paths.model);
    path("pred", cfg.paths.pred);
    path("resume", cfg.paths.resume);
  }
  return cfg;
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text) {
  Json root;
  try {
    root = Json::parse(json_text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  PipelineConfig cfg;
  try {
    cfg = from_json(root);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: wrong value type: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate(const PipelineConfig& cfg) {
  const SynthSection& s = cfg.synth;
  try {
    if (s.scenes < 0) throw InvalidArgument("synth.scenes must be >= 0");
    if (s.layers < 1) throw InvalidArgument("synth.layers must be >= 1");
    if (s.disparity_min < 1) throw InvalidArgument("synth.disparity_min must be >= 1 (metric depth needs d > 0)");
    if (s.disparity_max < s.disparity_min) throw InvalidArgument("synth.disparity_max must be >= disparity_min");
    if (s.disparity_max - s.disparity_min + 1 < s.layers) {
      throw InvalidArgument("synth: disparity range too small for distinct layer disparities");
    }
    if (!(s.focal_baseline > 0.0)) throw InvalidArgument("synth.focal_baseline must be > 0");
    SynthSceneSpec spec;
    spec.width = s.width;
    spec.height = s.height;
    spec.channels = s.channels;
    spec.search_range = s.search_range;
    spec.texture_density = s.texture_density;
    spec.layer_disparities = {s.disparity_max};
    validate(spec);

    validate(cfg.sgm);

    PairSampleConfig pc;
    pc.count = cfg.pairs.count;
    pc.equal_threshold = cfg.pairs.equal_threshold;
    validate(pc);

    if (cfg.bins.d_min) {
      BinningScheme(*cfg.bins.d_min, cfg.bins.d_max, cfg.bins.count);
    } else if (!(cfg.bins.d_max > 0.0)) {
      throw InvalidArgument("bins.d_max must be > 0");
    }
    if (cfg.bins.count < 2) throw InvalidArgument("bins.count must be >= 2");
    if (cfg.bins.alpha && !(*cfg.bins.alpha >= 0.0)) throw InvalidArgument("bins.alpha must be >= 0");

    NetConfig net = cfg.train.net;
    net.head = HeadMode::kRanking;
    net.bins = 1;
    validate(net);
    if (net.in_channels != s.channels) throw InvalidArgument("train.net.in_channels must match synth.channels");
    if (cfg.train.finetune_head == HeadMode::kRanking) {
      throw InvalidArgument("train.finetune.head must be classification or regression");
    }
    validate(cfg.train.pretrain.schedule);
    validate(cfg.train.pretrain.augment);
    validate(cfg.train.finetune.schedule);
    validate(cfg.train.finetune.augment);

    if (cfg.eval.whdr_pairs < 1) throw InvalidArgument("eval.whdr_pairs must be >= 1");
    if (!(cfg.eval.whdr_threshold >= 0.0)) throw InvalidArgument("eval.whdr_threshold must be >= 0");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string config_to_json(const PipelineConfig& cfg) {
  Json root;
  root["seed"] = cfg.seed;
  const SynthSection& s = cfg.synth;
  root["synth"] = {{"scenes", s.scenes},
                   {"width", s.width},
                   {"height", s.height},
                   {"channels", s.channels},
                   {"layers", s.layers},
                   {"disparity_min", s.disparity_min},
                   {"disparity_max", s.disparity_max},
                   {"search_range", s.search_range},
                   {"texture_density", s.texture_density},
                   {"focal_baseline", s.focal_baseline}};
  root["sgm"] = {{"levels", cfg.sgm.levels},
                 {"use_bilsub", cfg.sgm.use_bilsub},
                 {"bilsub",
                  {{"spatial_sigma", cfg.sgm.bilsub.spatial_sigma},
                   {"range_sigma", cfg.sgm.bilsub.range_sigma},
                   {"radius", cfg.sgm.bilsub.radius}}},
                 {"p1", cfg.sgm.sgm.p1},
                 {"p2", cfg.sgm.sgm.p2},
                 {"directions", directions_to_json(cfg.sgm.sgm.directions)},
                 {"median_radius", cfg.sgm.median_radius}};
  root["pairs"] = {{"count", cfg.pairs.count},
                   {"equal_threshold", cfg.pairs.equal_threshold},
                   {"resample", cfg.pairs.resample},
                   {"reduction", cfg.pairs.reduction == PairReduction::kMean ? "mean" : "sum"}};
  Json bins;
  bins["d_min"] = cfg.bins.d_min ? Json(*cfg.bins.d_min) : Json(nullptr);
  bins["d_max"] = cfg.bins.d_max;
  bins["count"] = cfg.bins.count;
  bins["alpha"] = cfg.bins.alpha ? Json(*cfg.bins.alpha) : Json(nullptr);
  root["bins"] = bins;

  auto stage = [](const StageSection& st) {
    Json j;
    j["schedule"] = {{"batch_size", st.schedule.batch_size},
                     {"lr", st.schedule.learning_rate},
                     {"iterations", st.schedule.iterations},
                     {"decay_at", st.schedule.decay_at},
                     {"decay_factor", st.schedule.decay_factor},
                     {"momentum", st.schedule.momentum},
                     {"weight_decay", st.schedule.weight_decay}};
    j["augment"] = {{"scale_lo", st.augment.scale_lo},
                    {"scale_hi", st.augment.scale_hi},
                    {"flip_prob", st.augment.flip_prob}};
    return j;
  };
  Json net = detail::to_json(cfg.train.net);
  net.erase("head");
  net.erase("bins");
  root["train"]["net"] = net;
  root["train"]["pretrain"] = stage(cfg.train.pretrain);
  root["train"]["finetune"] = stage(cfg.train.finetune);
  root["train"]["finetune"]["head"] = to_string(cfg.train.finetune_head);
  root["eval"] = {{"whdr_pairs", cfg.eval.whdr_pairs},
                  {"whdr_threshold", cfg.eval.whdr_threshold},
                  {"strict_pairs_only", cfg.eval.strict_pairs_only}};
  return root.dump(2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 finaliser over a simple combination of the inputs.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

}  // namespace odepth
