#include <random>

#include "doctest.h"
#include "odepth/checkpoint.hpp"
#include "odepth/image_io.hpp"
#include "odepth/synth.hpp"
#include "odepth/trainer.hpp"
#include "temp_dir.hpp"

using namespace odepth;

namespace {

NetConfig small_net() {
  NetConfig cfg;
  cfg.widths = {4, 8};
  cfg.stage_strides = {1, 2};
  cfg.blocks_per_stage = 1;
  cfg.fc_widths = {8, 8};
  cfg.seed = 21;
  return cfg;
}

std::vector<double> flat(Network& net) {
  std::vector<double> out;
  for (Parameter* p : net.parameters()) {
    out.insert(out.end(), p->value.values.begin(), p->value.values.end());
    out.insert(out.end(), p->velocity.values.begin(), p->velocity.values.end());
  }
  for (const Buffer& b : net.buffers()) out.insert(out.end(), b.tensor->values.begin(), b.tensor->values.end());
  return out;
}

std::vector<DepthSample> dataset() {
  std::vector<DepthSample> out;
  for (std::uint64_t i = 0; i < 3; ++i) {
    SynthSceneSpec spec;
    spec.width = 32;
    spec.height = 32;
    spec.layer_disparities = {1, 2, 5};
    spec.seed = 40 + i;
    const Stereogram s = generate_stereogram(spec);
    out.push_back({s.left, disparity_to_depth(s.disparity, 16.0)});
  }
  return out;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("round trip preserves weights, buffers and meta") {
  testing_util::TempDir dir;
  Network net(small_net());
  net.replace_head(HeadMode::kClassification, 5, 3);
  std::mt19937_64 rng(1);
  Image img(16, 16, 3);
  for (double& v : img.data()) v = std::uniform_real_distribution<double>(0, 1)(rng);
  net.calibrate(image_to_tensor(img));
  for (Parameter* p : net.parameters()) {
    for (double& v : p->velocity.values) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  }
  const CheckpointMeta meta{"finetune", 17, 99, 1.25, 20.0};
  save_checkpoint(net, meta, dir.path() / "m.ckpt");
  LoadedCheckpoint loaded = load_checkpoint(dir.path() / "m.ckpt");
  CHECK(loaded.meta == meta);
  CHECK(loaded.net.config().head == HeadMode::kClassification);
  CHECK(loaded.net.config().bins == 5);
  CHECK(loaded.net.config_hash() == net.config_hash());
  CHECK(loaded.net.calibrated());
  CHECK(flat(loaded.net) == flat(net));
  CHECK(run_network(loaded.net, img).values == run_network(net, img).values);

  const auto bytes = testing_util::read_bytes(dir.path() / "m.ckpt");
  REQUIRE(bytes.size() > 16);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "ODCK");
  CHECK(static_cast<unsigned char>(bytes[4]) == kCheckpointVersion);
}

TEST_CASE("damaged checkpoints are rejected") {
  testing_util::TempDir dir;
  Network net(small_net());
  save_checkpoint(net, {}, dir.path() / "m.ckpt");
  auto bytes = testing_util::read_bytes(dir.path() / "m.ckpt");

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  testing_util::write_bytes(dir.path() / "magic.ckpt", bad_magic);
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "magic.ckpt"), IoError);

  auto bad_version = bytes;
  bad_version[4] = 9;
  testing_util::write_bytes(dir.path() / "version.ckpt", bad_version);
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "version.ckpt"), IoError);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 8);
  testing_util::write_bytes(dir.path() / "short.ckpt", truncated);
  CHECK_THROWS_AS(load_checkpoint(dir.path() / "short.ckpt"), IoError);

  CHECK_THROWS_AS(load_checkpoint(dir.path() / "missing.ckpt"), IoError);
}

TEST_CASE("resumed training is bit-identical to an uninterrupted run") {
  testing_util::TempDir dir;
  const auto data = dataset();
  const BinningScheme scheme(1.0, 20.0, 6);
  const InfoGainMatrix h = info_gain_matrix(6, 0.2);
  TrainOptions opt;
  opt.schedule.iterations = 10;
  opt.schedule.batch_size = 2;
  opt.schedule.learning_rate = 2e-3;
  opt.schedule.decay_at = {4};
  opt.augment = {0.8, 1.2, 0.5};
  opt.seed = 8;

  Network full(small_net());
  const auto full_log = finetune_classification(full, data, scheme, h, opt);

  Network first(small_net());
  TrainOptions part = opt;
  part.schedule.iterations = 6;
  finetune_classification(first, data, scheme, h, part);
  save_checkpoint(first, {"finetune", 6, opt.seed, 1.0, 20.0}, dir.path() / "half.ckpt");

  LoadedCheckpoint resumed = load_checkpoint(dir.path() / "half.ckpt");
  TrainOptions rest = opt;
  rest.start_iteration = resumed.meta.iterations_done;
  const auto rest_log = finetune_classification(resumed.net, data, scheme, h, rest);
  REQUIRE(rest_log.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(rest_log[i].loss == full_log[6 + i].loss);
  CHECK(flat(resumed.net) == flat(full));
}

}  // TEST_SUITE
