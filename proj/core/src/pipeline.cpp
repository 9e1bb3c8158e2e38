#include "odepth/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "json_util.hpp"
#include "odepth/checkpoint.hpp"
#include "odepth/image_io.hpp"
#include "odepth/ordinal.hpp"
#include "odepth/synth.hpp"

namespace odepth {

namespace fs = std::filesystem;
using detail::Json;

namespace {

enum Stream : std::uint64_t {
  kSceneLayout = 1,
  kSceneTexture = 2,
  kPairs = 3,
  kPretrain = 4,
  kNetInit = 5,
  kWhdrPairs = 6,
  kFinetune = 7,
};

const fs::path& require_path(const fs::path& p, const char* flag) {
  if (p.empty()) throw ConfigError(std::string("missing required path --") + flag);
  return p;
}

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) throw RuntimeFailure(std::string(what) + " directory not found: " + p.string());
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw RuntimeFailure(std::string(what) + " not found: " + p.string());
}

void make_out_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw RuntimeFailure("cannot create output directory " + out.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw RuntimeFailure("cannot write " + path.string());
}

Json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw RuntimeFailure("malformed " + path.string() + ": " + e.what());
  }
}

// A directory of per-scene files `<name><ext>` with a manifest naming them.
std::vector<std::string> load_listing(const fs::path& dir, const std::string& kind) {
  require_dir(dir, kind.c_str());
  const Json j = read_json(dir / "manifest.json");
  try {
    if (j.at("kind").get<std::string>() != kind) {
      throw RuntimeFailure(dir.string() + " is not a " + kind + " directory");
    }
    return j.at("scenes").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw RuntimeFailure("malformed manifest in " + dir.string() + ": " + e.what());
  }
}

void write_listing(const fs::path& dir, const std::string& kind, const std::vector<std::string>& names) {
  Json j;
  j["kind"] = kind;
  j["scenes"] = names;
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

// Runs `fn` per item, collecting failures so one bad file does not hide the rest.
template <typename Fn>
void for_each_scene(const std::vector<std::string>& names, Fn fn) {
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < names.size(); ++i) {
    try {
      fn(i);
    } catch (const std::exception& e) {
      failures.push_back(names[i] + ": " + e.what());
    }
  }
  if (!failures.empty()) {
    std::string msg = std::to_string(failures.size()) + " of " + std::to_string(names.size()) + " scenes failed";
    for (const auto& f : failures) msg += "\n  " + f;
    throw RuntimeFailure(msg);
  }
}

std::vector<std::string> scene_names(const Dataset& ds) {
  std::vector<std::string> names;
  for (const auto& s : ds.scenes) names.push_back(s.name);
  return names;
}

NetConfig trunk_config(const PipelineConfig& cfg) {
  NetConfig net = cfg.train.net;
  net.head = HeadMode::kRanking;
  net.bins = 1;
  net.seed = derive_seed(cfg.seed, kNetInit, cfg.train.net.seed);
  return net;
}

class LogWriter {
 public:
  explicit LogWriter(const fs::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw RuntimeFailure("cannot write " + path.string());
  }
  void operator()(const LogEntry& e) {
    Json j;
    j["iter"] = e.iter;
    j["loss"] = e.loss;
    j["lr"] = e.lr;
    out_ << j.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

LoadedCheckpoint load_stage_checkpoint(const fs::path& path, const std::string& stage) {
  require_file(path, "checkpoint");
  LoadedCheckpoint ck = load_checkpoint(path);
  if (ck.meta.stage != stage) {
    throw ConfigError("checkpoint " + path.string() + " is from stage '" + ck.meta.stage + "', expected '" + stage + "'");
  }
  return ck;
}

int resume_point(const CheckpointMeta& meta, const TrainSchedule& s) {
  if (meta.iterations_done > s.iterations) {
    throw ConfigError("resume checkpoint has " + std::to_string(meta.iterations_done) +
                      " iterations, more than the schedule's " + std::to_string(s.iterations));
  }
  return meta.iterations_done;
}

std::vector<DepthSample> load_depth_samples(const Dataset& ds) {
  std::vector<DepthSample> out;
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
    out.push_back({load_image(ds.left(i)), load_pfm(ds.gt(i), DepthRole::kDepth)});
  }
  return out;
}

DepthMap model_prediction(Network& net, const Image& image, const CheckpointMeta& meta) {
  if (net.config().head == HeadMode::kRanking) return predict_relative(net, image);
  if (net.config().head == HeadMode::kClassification) {
    const BinningScheme scheme(meta.bin_d_min, meta.bin_d_max, net.config().bins);
    return predict_depth(net, image, &scheme);
  }
  return predict_depth(net, image, nullptr);
}

}  // namespace

Dataset load_dataset(const fs::path& dir) {
  require_dir(dir, "dataset");
  const Json j = read_json(dir / "manifest.json");
  Dataset ds;
  ds.root = dir;
  try {
    if (j.at("kind").get<std::string>() != "synth") throw RuntimeFailure(dir.string() + " is not a dataset directory");
    ds.focal_baseline = j.at("focal_baseline").get<double>();
    for (const Json& s : j.at("scenes")) {
      ds.scenes.push_back({s.at("name").get<std::string>(), s.at("seed").get<std::uint64_t>(),
                           s.at("layer_disparities").get<std::vector<int>>()});
    }
  } catch (const Json::exception& e) {
    throw RuntimeFailure("malformed dataset manifest in " + dir.string() + ": " + e.what());
  }
  return ds;
}

void cmd_synth(const PipelineConfig& cfg) {
  const fs::path& out = require_path(cfg.paths.out, "out");
  const SynthSection& s = cfg.synth;

  std::vector<SynthSceneSpec> specs;
  for (int i = 0; i < s.scenes; ++i) {
    std::mt19937_64 rng(derive_seed(cfg.seed, kSceneLayout, static_cast<std::uint64_t>(i)));
    std::vector<int> range(static_cast<std::size_t>(s.disparity_max - s.disparity_min + 1));
    std::iota(range.begin(), range.end(), s.disparity_min);
    std::shuffle(range.begin(), range.end(), rng);
    range.resize(static_cast<std::size_t>(s.layers));
    std::sort(range.begin(), range.end());

    SynthSceneSpec spec;
    spec.width = s.width;
    spec.height = s.height;
    spec.channels = s.channels;
    spec.layer_disparities = range;
    spec.search_range = s.search_range;
    spec.texture_density = s.texture_density;
    spec.seed = derive_seed(cfg.seed, kSceneTexture, static_cast<std::uint64_t>(i));
    validate(spec);
    specs.push_back(spec);
  }

  make_out_dir(out);
  Json manifest;
  manifest["kind"] = "synth";
  manifest["seed"] = cfg.seed;
  manifest["focal_baseline"] = s.focal_baseline;
  manifest["scenes"] = Json::array();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03zu", i);
    const Stereogram st = generate_stereogram(specs[i]);
    const fs::path dir = out / name;
    make_out_dir(dir);
    save_pnm(st.left, dir / "left.ppm");
    save_pnm(st.right, dir / "right.ppm");
    save_pfm(disparity_to_depth(st.disparity, s.focal_baseline), dir / "gt.pfm");
    Json entry;
    entry["name"] = name;
    entry["left"] = std::string(name) + "/left.ppm";
    entry["right"] = std::string(name) + "/right.ppm";
    entry["gt"] = std::string(name) + "/gt.pfm";
    entry["seed"] = specs[i].seed;
    entry["layer_disparities"] = specs[i].layer_disparities;
    manifest["scenes"].push_back(entry);
  }
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
}

void cmd_stereo(const PipelineConfig& cfg) {
  const fs::path& in = require_path(cfg.paths.in, "in");
  const fs::path& out = require_path(cfg.paths.out, "out");
  const Dataset ds = load_dataset(in);
  const auto names = scene_names(ds);
  make_out_dir(out);
  for_each_scene(names, [&](std::size_t i) {
    const DepthMap disparity = compute_disparity(load_image(ds.left(i)), load_image(ds.right(i)), cfg.sgm);
    save_pfm(disparity, out / (names[i] + ".pfm"));
  });
  write_listing(out, "disparity", names);
}

void cmd_pairs(const PipelineConfig& cfg) {
  const fs::path& in = require_path(cfg.paths.in, "in");
  const fs::path& out = require_path(cfg.paths.out, "out");
  const auto names = load_listing(in, "disparity");
  make_out_dir(out);
  for_each_scene(names, [&](std::size_t i) {
    const DepthMap disparity = load_pfm(in / (names[i] + ".pfm"), DepthRole::kDisparity);
    PairSampleConfig pc;
    pc.count = cfg.pairs.count;
    pc.equal_threshold = cfg.pairs.equal_threshold;
    pc.seed = derive_seed(cfg.seed, kPairs, i);
    save_pairs_csv(sample_pairs(disparity, pc), out / (names[i] + ".csv"));
  });
  write_listing(out, "pairs", names);
}

void cmd_pretrain(const PipelineConfig& cfg) {
  const fs::path& data = require_path(cfg.paths.data, "data");
  const fs::path& out = require_path(cfg.paths.out, "out");
  const Dataset ds = load_dataset(data);
  const StageSection& stage = cfg.train.pretrain;

  std::vector<RankingSample> samples;
  if (cfg.pairs.resample) {
    const fs::path& disp_dir = require_path(cfg.paths.disparity, "disparity");
    const auto names = load_listing(disp_dir, "disparity");
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
      if (std::find(names.begin(), names.end(), ds.scenes[i].name) == names.end()) {
        throw RuntimeFailure("no disparity map for " + ds.scenes[i].name);
      }
      samples.push_back({load_image(ds.left(i)), load_pfm(disp_dir / (ds.scenes[i].name + ".pfm"), DepthRole::kDisparity), {}});
    }
  } else {
    const fs::path& pairs_dir = require_path(cfg.paths.pairs, "pairs");
    const auto names = load_listing(pairs_dir, "pairs");
    for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
      if (std::find(names.begin(), names.end(), ds.scenes[i].name) == names.end()) {
        throw RuntimeFailure("no pair set for " + ds.scenes[i].name);
      }
      Image image = load_image(ds.left(i));
      DepthMap placeholder(image.width(), image.height(), DepthRole::kDisparity);
      samples.push_back({std::move(image), std::move(placeholder), load_pairs_csv(pairs_dir / (ds.scenes[i].name + ".csv"))});
      if (samples.back().pairs.empty()) throw RuntimeFailure("empty pair set for " + ds.scenes[i].name);
    }
  }

  TrainOptions opt;
  opt.schedule = stage.schedule;
  opt.augment = stage.augment;
  opt.seed = derive_seed(cfg.seed, kPretrain);
  Network net(trunk_config(cfg));
  if (!cfg.paths.resume.empty()) {
    LoadedCheckpoint ck = load_stage_checkpoint(cfg.paths.resume, "pretrain");
    opt.start_iteration = resume_point(ck.meta, stage.schedule);
    net = std::move(ck.net);
  }
  if (samples.empty()) throw RuntimeFailure("dataset " + data.string() + " has no scenes");

  PairSampleConfig pc;
  pc.count = cfg.pairs.count;
  pc.equal_threshold = cfg.pairs.equal_threshold;

  make_out_dir(out);
  LogWriter log(out / "train_log.jsonl");
  opt.on_iteration = [&](const LogEntry& e) { log(e); };
  pretrain_ranking(net, samples, pc, opt, cfg.pairs.reduction);

  CheckpointMeta meta;
  meta.stage = "pretrain";
  meta.iterations_done = stage.schedule.iterations;
  meta.seed = cfg.seed;
  save_checkpoint(net, meta, out / "model.ckpt");
}

void cmd_finetune(const PipelineConfig& cfg) {
  const fs::path& data = require_path(cfg.paths.data, "data");
  const fs::path& out = require_path(cfg.paths.out, "out");
  const Dataset ds = load_dataset(data);
  const StageSection& stage = cfg.train.finetune;
  const bool classify = cfg.train.finetune_head == HeadMode::kClassification;
  if (!cfg.paths.resume.empty() && !cfg.paths.model.empty()) {
    throw ConfigError("--resume and --model are mutually exclusive");
  }

  TrainOptions opt;
  opt.schedule = stage.schedule;
  opt.augment = stage.augment;
  opt.seed = derive_seed(cfg.seed, kFinetune);

  Network net(trunk_config(cfg));
  CheckpointMeta meta;
  meta.stage = "finetune";
  meta.seed = cfg.seed;
  bool resumed = false;
  if (!cfg.paths.resume.empty()) {
    LoadedCheckpoint ck = load_stage_checkpoint(cfg.paths.resume, "finetune");
    if (ck.net.config().head != cfg.train.finetune_head) {
      throw ConfigError("resume checkpoint head does not match train.finetune.head");
    }
    opt.start_iteration = resume_point(ck.meta, stage.schedule);
    meta.bin_d_min = ck.meta.bin_d_min;
    meta.bin_d_max = ck.meta.bin_d_max;
    net = std::move(ck.net);
    resumed = true;
  } else if (!cfg.paths.model.empty()) {
    net = load_stage_checkpoint(cfg.paths.model, "pretrain").net;
  }

  const std::vector<DepthSample> samples = load_depth_samples(ds);
  if (samples.empty()) throw RuntimeFailure("dataset " + data.string() + " has no scenes");

  if (classify && !resumed) {
    double d_min = std::numeric_limits<double>::infinity();
    if (cfg.bins.d_min) {
      d_min = *cfg.bins.d_min;
    } else {
      for (const DepthSample& s : samples) {
        for (int y = 0; y < s.depth.height(); ++y) {
          for (int x = 0; x < s.depth.width(); ++x) {
            if (s.depth.valid(x, y) && s.depth.at(x, y) > 0.0) d_min = std::min(d_min, s.depth.at(x, y));
          }
        }
      }
      if (!std::isfinite(d_min)) throw RuntimeFailure("training set has no valid depth");
    }
    if (!(d_min < cfg.bins.d_max)) throw ConfigError("bins: d_min must be below d_max");
    meta.bin_d_min = d_min;
    meta.bin_d_max = cfg.bins.d_max;
  }

  make_out_dir(out);
  LogWriter log(out / "train_log.jsonl");
  opt.on_iteration = [&](const LogEntry& e) { log(e); };
  if (classify) {
    const BinningScheme scheme(meta.bin_d_min, meta.bin_d_max, cfg.bins.count);
    const InfoGainMatrix h = cfg.bins.alpha ? InfoGainMatrix(cfg.bins.count, *cfg.bins.alpha)
                                            : InfoGainMatrix::identity(cfg.bins.count);
    finetune_classification(net, samples, scheme, h, opt);
  } else {
    train_regression(net, samples, opt);
  }
  meta.iterations_done = stage.schedule.iterations;
  save_checkpoint(net, meta, out / "model.ckpt");
}

MetricsReport cmd_eval(const PipelineConfig& cfg) {
  const fs::path& data = require_path(cfg.paths.data, "data");
  const fs::path& out = require_path(cfg.paths.out, "out");
  if (cfg.paths.model.empty() == cfg.paths.pred.empty()) throw ConfigError("eval needs exactly one of --model, --pred");
  const Dataset ds = load_dataset(data);

  std::optional<LoadedCheckpoint> ck;
  if (!cfg.paths.model.empty()) {
    require_file(cfg.paths.model, "checkpoint");
    ck = load_checkpoint(cfg.paths.model);
    if (ck->net.config().head == HeadMode::kRanking) {
      throw ConfigError("eval needs a metric model; " + cfg.paths.model.string() + " has a ranking head");
    }
  } else {
    require_dir(cfg.paths.pred, "prediction");
  }

  std::vector<MetricsReport> reports;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
    const DepthMap gt = load_pfm(ds.gt(i), DepthRole::kDepth);
    if (gt.valid_count() == 0) continue;
    const DepthMap pred = ck ? model_prediction(ck->net, load_image(ds.left(i)), ck->meta)
                             : load_pfm(cfg.paths.pred / (ds.scenes[i].name + ".pfm"), DepthRole::kDepth);
    reports.push_back(evaluate(pred, gt));
    names.push_back(ds.scenes[i].name);
  }
  if (reports.empty()) throw RuntimeFailure("no scene in " + data.string() + " has valid ground truth");
  const MetricsReport pooled = aggregate(reports);

  make_out_dir(out);
  write_text(out / "metrics.json", pooled.to_json() + "\n");
  std::string csv = "scene," + MetricsReport::csv_header() + "\n";
  for (std::size_t i = 0; i < reports.size(); ++i) csv += names[i] + "," + reports[i].to_csv_row() + "\n";
  csv += "all," + pooled.to_csv_row() + "\n";
  write_text(out / "metrics.csv", csv);
  return pooled;
}

double cmd_whdr(const PipelineConfig& cfg) {
  const fs::path& data = require_path(cfg.paths.data, "data");
  const fs::path& out = require_path(cfg.paths.out, "out");
  const fs::path& model = require_path(cfg.paths.model, "model");
  const Dataset ds = load_dataset(data);
  require_file(model, "checkpoint");
  std::vector<std::string> pair_names;
  if (!cfg.paths.pairs.empty()) pair_names = load_listing(cfg.paths.pairs, "pairs");
  LoadedCheckpoint ck = load_checkpoint(model);

  double disagreements = 0.0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
    const std::string& name = ds.scenes[i].name;
    std::vector<OrdinalPair> pairs;
    if (!cfg.paths.pairs.empty()) {
      if (std::find(pair_names.begin(), pair_names.end(), name) == pair_names.end()) {
        throw RuntimeFailure("no pair set for " + name);
      }
      pairs = load_pairs_csv(cfg.paths.pairs / (name + ".csv"));
    } else {
      // Ground-truth relations: convert depth back to disparity so the
      // equality threshold is in the same units as for stereo pairs.
      const DepthMap gt = load_pfm(ds.gt(i), DepthRole::kDepth);
      DepthMap disp(gt.width(), gt.height(), DepthRole::kDisparity);
      for (int y = 0; y < gt.height(); ++y) {
        for (int x = 0; x < gt.width(); ++x) {
          if (gt.valid(x, y) && gt.at(x, y) > 0.0) {
            disp.set(x, y, ds.focal_baseline / gt.at(x, y));
          } else {
            disp.invalidate(x, y);
          }
        }
      }
      if (disp.valid_count() < 2) continue;
      PairSampleConfig pc;
      pc.count = cfg.eval.whdr_pairs;
      pc.equal_threshold = cfg.pairs.equal_threshold;
      pc.seed = derive_seed(cfg.seed, kWhdrPairs, i);
      pairs = sample_pairs(disp, pc);
    }
    if (cfg.eval.strict_pairs_only) {
      std::erase_if(pairs, [](const OrdinalPair& p) { return p.r == 0; });
    }
    if (pairs.empty()) continue;
    const DepthMap pred = model_prediction(ck.net, load_image(ds.left(i)), ck.meta);
    disagreements += std::round(whdr(pred, pairs, cfg.eval.whdr_threshold) * static_cast<double>(pairs.size()));
    total += pairs.size();
  }
  if (total == 0) throw RuntimeFailure("no ordinal pairs to score in " + data.string());
  const double value = disagreements / static_cast<double>(total);

  make_out_dir(out);
  Json j;
  j["whdr"] = value;
  j["pairs"] = total;
  j["scenes"] = ds.scenes.size();
  write_text(out / "whdr.json", j.dump(2) + "\n");
  return value;
}

}  // namespace odepth
