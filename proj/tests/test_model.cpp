// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "mrx/model.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mrx/train.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/synth.hpp"

namespace {

namespace fs = std::filesystem;
using mrx::MrxConfig;
using mrx::MrxModel;

MrxConfig toy_config(int rate = 8000) {
  MrxConfig c;
  c.window_ms = {32.0, 64.0};
  c.sample_rate = rate;
  c.hidden = 64;
  c.lstm_hidden = 32;
  c.lstm_layers = 2;
  c.lstm_stacks = 2;
  c.chunk_s = 2.0;
  return c;
}

MrxConfig micro_config() {
  MrxConfig c;
  c.window_ms = {4.0, 8.0};  // 32 and 64 samples at 8 kHz
  c.sample_rate = 8000;
  c.hidden = 16;
  c.lstm_hidden = 8;
  c.lstm_layers = 2;
  c.lstm_stacks = 2;
  c.chunk_s = 0.02;
  return c;
}

TEST(MrxConfig, DefaultResolutionArithmetic) {
  MrxConfig c;  // 32/64/256 ms
  c.sample_rate = 16000;
  const auto cfgs = c.stft_configs();
  ASSERT_EQ(cfgs.size(), 3u);
  EXPECT_EQ(cfgs[0].window_samples, 512);
  EXPECT_EQ(cfgs[1].window_samples, 1024);
  EXPECT_EQ(cfgs[2].window_samples, 4096);
  EXPECT_EQ(cfgs[0].bins(), 257);
  EXPECT_EQ(cfgs[1].bins(), 513);
  EXPECT_EQ(cfgs[2].bins(), 2049);
  EXPECT_EQ(c.hop_samples(), 128);
  for (const auto& cfg : cfgs) EXPECT_EQ(cfg.hop_samples, 128);

  c.sample_rate = 44100;
  const auto cfgs44 = c.stft_configs();
  EXPECT_EQ(cfgs44[0].window_samples, 1024);
  EXPECT_EQ(cfgs44[1].window_samples, 2048);
  EXPECT_EQ(cfgs44[2].window_samples, 8192);
  EXPECT_EQ(c.hop_samples(), 256);
}

TEST(Encode, NineSecondFeatureShape) {
  // 9 s at 16 kHz with hop 128 -> N = 1126 frames of width `hidden`.
  MrxConfig c;
  c.sample_rate = 16000;
  c.lstm_stacks = 1;  // encode() does not touch the stacks
  c.lstm_layers = 1;
  c.lstm_hidden = 4;
  auto model = MrxModel::create(c, 1);
  const auto mix = mrx::testsupport::random_signal(144000, 16000, 2);
  const auto ctx = mrx::encode(model, mix, false);
  EXPECT_EQ(ctx.features->shape, (mrx::nn::Shape{1126, 512}));
  for (const auto& spec : ctx.spectrograms) EXPECT_EQ(spec->frames, 1126u);
}

TEST(Encode, SingleResolutionMeanIsIdentity) {
  auto cfg = toy_config();
  cfg.window_ms = {32.0};
  auto model = MrxModel::create(cfg, 3);
  const auto mix = mrx::testsupport::random_signal(4000, 8000, 5);
  auto ctx = mrx::encode(model, mix, false);
  // With one branch the averaged features equal the branch output; verify
  // by recomputing the branch by hand.
  auto spec = mrx::stft(mix, cfg.stft_configs()[0]);
  auto mag = mrx::nn::make_tensor({static_cast<std::int64_t>(spec.frames),
                                   static_cast<std::int64_t>(spec.bins)});
  for (std::size_t i = 0; i < spec.data.size(); ++i) mag->value[i] = std::abs(spec.data[i]);
  auto manual =
      mrx::nn::tanh_op(model.encoders[0].bn.apply(model.encoders[0].fc.apply(mag), false));
  ASSERT_EQ(manual->value.size(), ctx.features->value.size());
  for (std::size_t i = 0; i < manual->value.size(); ++i)
    ASSERT_NEAR(ctx.features->value[i], manual->value[i], 1e-15);
}

TEST(Encode, ZeroInputGivesTimeConstantFeatures) {
  auto model = MrxModel::create(toy_config(), 4);
  mrx::AudioBuffer zeros;
  zeros.sample_rate = 8000;
  zeros.samples.assign(4000, 0.0);
  const auto ctx = mrx::encode(model, zeros, false);
  const auto cols = ctx.features->shape[1];
  for (std::int64_t r = 1; r < ctx.features->shape[0]; ++r)
    for (std::int64_t c = 0; c < cols; ++c)
      ASSERT_EQ(ctx.features->value[r * cols + c], ctx.features->value[c]);
}

TEST(SeparateMasks, CountNonnegativityFiniteness) {
  auto model = MrxModel::create(toy_config(), 5);
  const auto mix = mrx::testsupport::random_signal(6000, 8000, 6);
  auto ctx = mrx::encode(model, mix, false);
  mrx::separate_masks(model, ctx, false);
  ASSERT_EQ(ctx.masks.size(), 3u);       // sources
  ASSERT_EQ(ctx.masks[0].size(), 2u);    // resolutions -> 3*I = 6 masks
  double positive = 0.0;
  for (const auto& per_source : ctx.masks)
    for (const auto& mask : per_source) {
      for (double v : mask->value) {
        ASSERT_TRUE(std::isfinite(v));
        ASSERT_GE(v, 0.0);
        positive += v > 0.0 ? 1.0 : 0.0;
      }
    }
  EXPECT_GT(positive, 0.0);
}

TEST(Reconstruct, UniformMasksRebuildMixture) {
  auto model = MrxModel::create(toy_config(), 7);
  const auto mix = mrx::testsupport::random_signal(8000, 8000, 8);
  auto ctx = mrx::encode(model, mix, false);
  mrx::separate_masks(model, ctx, false);
  // Force every mask to 1/I.
  const double inv = 1.0 / static_cast<double>(ctx.spectrograms.size());
  for (auto& per_source : ctx.masks)
    for (auto& mask : per_source)
      mask = mrx::nn::make_tensor(mask->shape,
                                  std::vector<double>(mask->value.size(), inv));
  mrx::reconstruct(ctx);
  for (const auto& stem : ctx.stems) {
    ASSERT_EQ(stem->value.size(), mix.size());
    double max_err = 0.0;
    for (std::size_t i = 0; i < mix.size(); ++i)
      max_err = std::max(max_err, std::abs(stem->value[i] - mix.samples[i]));
    EXPECT_LT(max_err, 1e-6);
  }
}

TEST(Reconstruct, ZeroMasksGiveSilence) {
  auto model = MrxModel::create(toy_config(), 9);
  const auto mix = mrx::testsupport::random_signal(4000, 8000, 10);
  auto ctx = mrx::encode(model, mix, false);
  mrx::separate_masks(model, ctx, false);
  for (auto& per_source : ctx.masks)
    for (auto& mask : per_source)
      mask = mrx::nn::make_tensor(mask->shape);
  mrx::reconstruct(ctx);
  for (const auto& stem : ctx.stems)
    for (double v : stem->value) ASSERT_EQ(v, 0.0);
}

TEST(Model, PermutationOfDecoderBlocksSwapsStems) {
  auto model = MrxModel::create(toy_config(), 11);
  const auto mix = mrx::testsupport::random_signal(6000, 8000, 12);
  auto base = mrx::forward(model, mix, false);

  // Swap the decoder output blocks of sources 0 and 2 in every resolution:
  // fc2 weight columns plus the matching bn2 parameter/stat blocks.
  for (std::size_t i = 0; i < model.decoders.size(); ++i) {
    auto& dec = model.decoders[i];
    const auto bins = static_cast<std::int64_t>(base.spectrograms[i]->bins);
    const auto swap_block = [bins](std::vector<double>& flat, std::int64_t stride) {
      for (std::int64_t r = 0; r < stride; ++r)
        for (std::int64_t c = 0; c < bins; ++c)
          std::swap(flat[r * 3 * bins + c], flat[r * 3 * bins + 2 * bins + c]);
    };
    swap_block(dec.fc2.weight->value, dec.fc2.weight->shape[0]);
    swap_block(dec.bn2.gamma->value, 1);
    swap_block(dec.bn2.beta->value, 1);
    swap_block(dec.bn2.state.running_mean, 1);
    swap_block(dec.bn2.state.running_var, 1);
  }
  auto swapped = mrx::forward(model, mix, false);
  for (std::size_t t = 0; t < mix.size(); ++t) {
    ASSERT_EQ(base.stems[0]->value[t], swapped.stems[2]->value[t]);
    ASSERT_EQ(base.stems[2]->value[t], swapped.stems[0]->value[t]);
    ASSERT_EQ(base.stems[1]->value[t], swapped.stems[1]->value[t]);
  }
}

TEST(Model, MicroGradientCheckEndToEnd) {
  auto model = MrxModel::create(micro_config(), 13);
  const auto mix = mrx::testsupport::random_signal(160, 8000, 14);  // N = 21 frames
  const auto toy = mrx::testsupport::make_toy_mixture(8000, 0.02, 3);
  std::array<std::vector<double>, 3> refs;
  for (int j = 0; j < 3; ++j) {
    refs[j] = toy.stems[j].samples;
    refs[j].resize(mix.size(), 0.01);
  }
  const auto build = [&]() { return mrx::chunk_loss(model, mix, refs, true); };
  const auto r =
      mrx::testsupport::check_gradients(model.parameters(), build, 1e-4, 6, 555);
  EXPECT_LT(r.max_rel_err, 1e-3) << "checked " << r.checked;
}

TEST(Model, CheckpointRoundTripBitIdentical) {
  const auto dir = fs::temp_directory_path() / "mrx_model_ckpt";
  fs::create_directories(dir);
  auto model = MrxModel::create(toy_config(), 15);
  const std::string p1 = (dir / "a.mrxckpt").string();
  const std::string p2 = (dir / "b.mrxckpt").string();
  mrx::model_to_checkpoint(model).save(p1);
  auto loaded = mrx::model_from_checkpoint(mrx::Checkpoint::load(p1));
  mrx::model_to_checkpoint(loaded).save(p2);

  const auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
  };
  EXPECT_EQ(slurp(p1), slurp(p2));

  // A quantized live model and its file round-trip infer identically.
  mrx::quantize_to_float32(model);
  const auto mix = mrx::testsupport::random_signal(5000, 8000, 16);
  const auto a = mrx::infer(model, mix);
  const auto b = mrx::infer(loaded, mix);
  for (int j = 0; j < 3; ++j)
    for (std::size_t t = 0; t < mix.size(); ++t)
      ASSERT_EQ(a.stems[j].samples[t], b.stems[j].samples[t]);
  fs::remove_all(dir);
}

TEST(Infer, SingleChunkEqualsDirectForward) {
  auto model = MrxModel::create(toy_config(), 17);
  const auto mix =
      mrx::testsupport::random_signal(model.config.chunk_samples(), 8000, 18);
  auto direct = mrx::forward(model, mix, false);
  const auto stitched = mrx::infer(model, mix);
  for (int j = 0; j < 3; ++j)
    for (std::size_t t = 0; t < mix.size(); ++t)
      ASSERT_EQ(stitched.stems[j].samples[t], direct.stems[j]->value[t]);
}

TEST(Infer, LongInputKeepsLengthAndStaysFinite) {
  auto model = MrxModel::create(toy_config(), 19);
  const auto mix = mrx::testsupport::random_signal(
      static_cast<std::size_t>(model.config.chunk_samples() * 2.7), 8000, 20);
  const auto out = mrx::infer(model, mix);
  for (int j = 0; j < 3; ++j) {
    ASSERT_EQ(out.stems[j].size(), mix.size());
    for (double v : out.stems[j].samples) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(Infer, Deterministic) {
  auto model = MrxModel::create(toy_config(), 21);
  const auto mix = mrx::testsupport::random_signal(
      static_cast<std::size_t>(model.config.chunk_samples() * 1.5), 8000, 22);
  const auto a = mrx::infer(model, mix);
  const auto b = mrx::infer(model, mix);
  for (int j = 0; j < 3; ++j)
    for (std::size_t t = 0; t < mix.size(); ++t)
      ASSERT_EQ(a.stems[j].samples[t], b.stems[j].samples[t]);
}

TEST(Model, RateMismatchRejected) {
  auto model = MrxModel::create(toy_config(8000), 23);
  const auto mix = mrx::testsupport::random_signal(4000, 16000, 24);
  EXPECT_THROW(mrx::encode(model, mix, false), mrx::ValidationError);
}

}  // namespace
