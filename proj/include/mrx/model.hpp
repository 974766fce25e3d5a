// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Multi-resolution CrossNet: the mixture is encoded as I synchronized
// STFTs, per-resolution fully-connected branches map magnitudes to a
// shared width and are averaged, BLSTM stacks process the average and are
// averaged again, and per-resolution decoders emit one nonnegative
// magnitude mask per source and resolution. Time-domain stems are the sum
// over resolutions of the masked inverse STFTs.

#ifndef MRX_MODEL_HPP
#define MRX_MODEL_HPP

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "mrx/audio.hpp"
#include "mrx/checkpoint.hpp"
#include "mrx/nn/layers.hpp"
#include "mrx/nn/signal_ops.hpp"
#include "mrx/nn/tensor.hpp"
#include "mrx/rng.hpp"
#include "mrx/stft.hpp"

namespace mrx {

struct MrxConfig {
  std::vector<double> window_ms = {32.0, 64.0, 256.0};
  int sample_rate = 44100;
  int hidden = 512;
  int lstm_hidden = 256;
  int num_sources = 3;
  int lstm_layers = 3;
  int lstm_stacks = 3;
  double chunk_s = 9.0;

  // All resolutions share the hop of the shortest window (quarter of it),
  // so their frame counts match on any input.
  int hop_samples() const {
    double shortest = window_ms.front();
    for (double ms : window_ms) shortest = std::min(shortest, ms);
    return std::max(1, quantize_window(shortest, sample_rate) / 4);
  }

  std::vector<StftConfig> stft_configs() const {
    std::vector<StftConfig> out;
    const int hop = hop_samples();
    for (double ms : window_ms) out.push_back(StftConfig::from_ms(ms, sample_rate, hop));
    return out;
  }

  int chunk_samples() const {
    return static_cast<int>(std::llround(chunk_s * sample_rate));
  }

  nlohmann::json to_json() const {
    return {{"window_ms", window_ms},   {"sample_rate", sample_rate},
            {"hidden", hidden},         {"lstm_hidden", lstm_hidden},
            {"num_sources", num_sources}, {"lstm_layers", lstm_layers},
            {"lstm_stacks", lstm_stacks}, {"chunk_s", chunk_s}};
  }

  static MrxConfig from_json(const nlohmann::json& j) {
    MrxConfig c;
    c.window_ms = j.at("window_ms").get<std::vector<double>>();
    c.sample_rate = j.at("sample_rate").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.lstm_hidden = j.at("lstm_hidden").get<int>();
    c.num_sources = j.at("num_sources").get<int>();
    c.lstm_layers = j.at("lstm_layers").get<int>();
    c.lstm_stacks = j.at("lstm_stacks").get<int>();
    c.chunk_s = j.at("chunk_s").get<double>();
    return c;
  }
};

struct MrxModel {
  struct EncoderBranch {
    nn::Linear fc;   // F_i -> hidden, no bias (batch norm supplies it)
    nn::BatchNorm bn;
  };
  struct DecoderBranch {
    nn::Linear fc1;  // 2*hidden -> hidden
    nn::BatchNorm bn1;
    nn::Linear fc2;  // hidden -> num_sources * F_i
    nn::BatchNorm bn2;
  };

  MrxConfig config;
  std::vector<EncoderBranch> encoders;
  std::vector<std::vector<nn::BiLstm>> stacks;  // [stack][layer]
  std::vector<DecoderBranch> decoders;

  static MrxModel create(const MrxConfig& config, std::uint64_t seed) {
    MrxModel m;
    m.config = config;
    Rng rng(seed);
    const auto cfgs = config.stft_configs();
    for (const auto& cfg : cfgs) {
      EncoderBranch enc;
      enc.fc = nn::Linear::create(cfg.bins(), config.hidden, false, rng);
      enc.bn = nn::BatchNorm::create(config.hidden);
      m.encoders.push_back(std::move(enc));
    }
    for (int s = 0; s < config.lstm_stacks; ++s) {
      std::vector<nn::BiLstm> stack;
      for (int l = 0; l < config.lstm_layers; ++l) {
        const int in = l == 0 ? config.hidden : 2 * config.lstm_hidden;
        stack.push_back(nn::BiLstm::create(in, config.lstm_hidden, rng));
      }
      m.stacks.push_back(std::move(stack));
    }
    for (const auto& cfg : cfgs) {
      DecoderBranch dec;
      dec.fc1 = nn::Linear::create(2 * config.hidden, config.hidden, false, rng);
      dec.bn1 = nn::BatchNorm::create(config.hidden);
      dec.fc2 = nn::Linear::create(config.hidden, config.num_sources * cfg.bins(), false, rng);
      dec.bn2 = nn::BatchNorm::create(config.num_sources * cfg.bins());
      m.decoders.push_back(std::move(dec));
    }
    return m;
  }

  // Trainable parameters in a fixed order (the optimizer and checkpoint
  // layout both rely on it).
  std::vector<nn::Var> parameters() {
    std::vector<nn::Var> out;
    for (auto& e : encoders) {
      out.push_back(e.fc.weight);
      out.push_back(e.bn.gamma);
      out.push_back(e.bn.beta);
    }
    for (auto& stack : stacks)
      for (auto& layer : stack)
        for (auto* dir : {&layer.fwd, &layer.bwd}) {
          out.push_back(dir->wx);
          out.push_back(dir->wh);
          out.push_back(dir->b);
        }
    for (auto& d : decoders) {
      out.push_back(d.fc1.weight);
      out.push_back(d.bn1.gamma);
      out.push_back(d.bn1.beta);
      out.push_back(d.fc2.weight);
      out.push_back(d.bn2.gamma);
      out.push_back(d.bn2.beta);
    }
    return out;
  }

  std::int64_t parameter_count() {
    std::int64_t n = 0;
    for (const auto& p : parameters()) n += p->size();
    return n;
  }
};

struct SeparatedStems {
  std::array<AudioBuffer, 3> stems;  // music, speech, sfx
};

namespace detail {

struct ForwardContext {
  std::vector<std::shared_ptr<const Spectrogram>> spectrograms;
  nn::Var features;                        // [N x hidden], averaged branches
  std::vector<std::vector<nn::Var>> masks; // [source][resolution]
  std::vector<nn::Var> stems;              // [source], 1-D length T
  std::size_t length = 0;
};

}  // namespace detail

// Multi-resolution encoding: I magnitude spectrograms -> per-branch
// FC+BN+tanh -> elementwise mean across branches.
inline detail::ForwardContext encode(MrxModel& model, const AudioBuffer& mixture,
                                     bool train) {
  if (mixture.sample_rate != model.config.sample_rate)
    throw ValidationError("encode: mixture rate " + std::to_string(mixture.sample_rate) +
                          " != model rate " + std::to_string(model.config.sample_rate));
  if (static_cast<int>(mixture.size()) < model.config.hop_samples())
    throw ValidationError("encode: input shorter than one hop");

  detail::ForwardContext ctx;
  ctx.length = mixture.size();
  std::vector<nn::Var> branches;
  for (const auto& cfg : model.config.stft_configs()) {
    auto spec = std::make_shared<Spectrogram>(stft(mixture, cfg));
    auto mag = nn::make_tensor({static_cast<std::int64_t>(spec->frames),
                                static_cast<std::int64_t>(spec->bins)});
    for (std::size_t i = 0; i < spec->data.size(); ++i)
      mag->value[i] = std::abs(spec->data[i]);
    const std::size_t branch = branches.size();
    auto& enc = model.encoders[branch];
    branches.push_back(nn::tanh_op(enc.bn.apply(enc.fc.apply(mag), train)));
    ctx.spectrograms.push_back(std::move(spec));
  }
  ctx.features = nn::mean_over(branches);
  return ctx;
}

// BLSTM stacks on the averaged features, second averaging bridge, then one
// decoder per resolution emitting num_sources stacked nonnegative masks.
inline void separate_masks(MrxModel& model, detail::ForwardContext& ctx, bool train) {
  std::vector<nn::Var> stack_outputs;
  for (auto& stack : model.stacks) {
    nn::Var h = ctx.features;
    for (auto& layer : stack) h = layer.apply(h);
    stack_outputs.push_back(h);
  }
  const nn::Var lstm_avg = nn::mean_over(stack_outputs);
  const nn::Var cat = nn::concat(ctx.features, lstm_avg, 1);

  const int sources = model.config.num_sources;
  ctx.masks.assign(sources, {});
  for (std::size_t i = 0; i < model.decoders.size(); ++i) {
    auto& dec = model.decoders[i];
    const nn::Var hidden = nn::relu(dec.bn1.apply(dec.fc1.apply(cat), train));
    const nn::Var all_masks = nn::relu(dec.bn2.apply(dec.fc2.apply(hidden), train));
    const auto bins = static_cast<std::int64_t>(ctx.spectrograms[i]->bins);
    for (int j = 0; j < sources; ++j)
      ctx.masks[j].push_back(nn::slice_cols(all_masks, j * bins, (j + 1) * bins));
  }
}

// x_hat_j = sum_i istft(M_ji .* Y_i), truncated to the input length.
inline void reconstruct(detail::ForwardContext& ctx) {
  ctx.stems.clear();
  for (const auto& source_masks : ctx.masks) {
    nn::Var acc;
    for (std::size_t i = 0; i < source_masks.size(); ++i) {
      nn::Var part = nn::mask_istft(source_masks[i], ctx.spectrograms[i], ctx.length);
      acc = acc ? nn::add(acc, part) : part;
    }
    ctx.stems.push_back(acc);
  }
}

// Full forward pass; the returned context carries the graph for training.
inline detail::ForwardContext forward(MrxModel& model, const AudioBuffer& mixture,
                                      bool train) {
  detail::ForwardContext ctx = encode(model, mixture, train);
  separate_masks(model, ctx, train);
  reconstruct(ctx);
  return ctx;
}

// Inference on arbitrary-length input: windows of chunk_s with 50% overlap
// and an exact-COLA integer tent cross-fade. A single-window input is the
// plain forward pass, bit for bit.
inline SeparatedStems infer(MrxModel& model, const AudioBuffer& mixture) {
  const auto chunk = static_cast<std::size_t>(model.config.chunk_samples());
  const std::size_t total = mixture.size();
  SeparatedStems out;
  for (auto& s : out.stems) {
    s.sample_rate = mixture.sample_rate;
    s.samples.assign(total, 0.0);
  }

  if (total <= chunk) {
    auto ctx = forward(model, mixture, false);
    for (int j = 0; j < 3; ++j) out.stems[j].samples = ctx.stems[j]->value;
    return out;
  }

  std::vector<std::size_t> starts;
  const std::size_t stride = chunk / 2;
  for (std::size_t s = 0; s + chunk < total; s += stride) starts.push_back(s);
  starts.push_back(total - chunk);

  // Integer tent: w[n] = min(n+1, L-n); adjacent 50%-offset copies sum to
  // a constant and the edges stay nonzero.
  std::vector<double> weight(chunk);
  for (std::size_t n = 0; n < chunk; ++n)
    weight[n] = static_cast<double>(std::min(n + 1, chunk - n));

  std::array<std::vector<double>, 3> acc;
  std::vector<double> den(total, 0.0);
  for (auto& a : acc) a.assign(total, 0.0);
  for (const std::size_t start : starts) {
    AudioBuffer piece;
    piece.sample_rate = mixture.sample_rate;
    piece.samples.assign(mixture.samples.begin() + start,
                         mixture.samples.begin() + start + chunk);
    auto ctx = forward(model, piece, false);
    for (int j = 0; j < 3; ++j)
      for (std::size_t n = 0; n < chunk; ++n)
        acc[j][start + n] += weight[n] * ctx.stems[j]->value[n];
    for (std::size_t n = 0; n < chunk; ++n) den[start + n] += weight[n];
  }
  for (int j = 0; j < 3; ++j)
    for (std::size_t t = 0; t < total; ++t) out.stems[j].samples[t] = acc[j][t] / den[t];
  return out;
}

// Checkpoint layout: model config in the header, arrays named by module
// path. Running batch-norm statistics ride along as arrays.
inline Checkpoint model_to_checkpoint(MrxModel& model) {
  Checkpoint ck;
  ck.config = {{"format", "mrx-model"}, {"model", model.config.to_json()}};
  const auto push = [&ck](const std::string& name, const std::vector<std::int64_t>& shape,
                          const std::vector<double>& data) {
    CheckpointArray a;
    a.name = name;
    a.shape = shape;
    a.data.assign(data.begin(), data.end());
    ck.arrays.push_back(std::move(a));
  };
  const auto push_var = [&push](const std::string& name, const nn::Var& v) {
    push(name, v->shape, v->value);
  };
  const auto push_bn = [&](const std::string& prefix, nn::BatchNorm& bn) {
    push_var(prefix + ".gamma", bn.gamma);
    push_var(prefix + ".beta", bn.beta);
    const auto f = static_cast<std::int64_t>(bn.state.running_mean.size());
    push(prefix + ".running_mean", {f}, bn.state.running_mean);
    push(prefix + ".running_var", {f}, bn.state.running_var);
  };

  for (std::size_t i = 0; i < model.encoders.size(); ++i) {
    const std::string p = "enc" + std::to_string(i);
    push_var(p + ".fc.weight", model.encoders[i].fc.weight);
    push_bn(p + ".bn", model.encoders[i].bn);
  }
  for (std::size_t s = 0; s < model.stacks.size(); ++s)
    for (std::size_t l = 0; l < model.stacks[s].size(); ++l) {
      const std::string p =
          "stack" + std::to_string(s) + ".layer" + std::to_string(l);
      auto& layer = model.stacks[s][l];
      push_var(p + ".fwd.wx", layer.fwd.wx);
      push_var(p + ".fwd.wh", layer.fwd.wh);
      push_var(p + ".fwd.b", layer.fwd.b);
      push_var(p + ".bwd.wx", layer.bwd.wx);
      push_var(p + ".bwd.wh", layer.bwd.wh);
      push_var(p + ".bwd.b", layer.bwd.b);
    }
  for (std::size_t i = 0; i < model.decoders.size(); ++i) {
    const std::string p = "dec" + std::to_string(i);
    push_var(p + ".fc1.weight", model.decoders[i].fc1.weight);
    push_bn(p + ".bn1", model.decoders[i].bn1);
    push_var(p + ".fc2.weight", model.decoders[i].fc2.weight);
    push_bn(p + ".bn2", model.decoders[i].bn2);
  }
  return ck;
}

namespace detail {

inline void fill_from_checkpoint(const Checkpoint& ck, const std::string& name,
                                 std::vector<double>& dest,
                                 const std::vector<std::int64_t>& shape) {
  const CheckpointArray* a = ck.find(name);
  if (a == nullptr) throw FormatError("checkpoint: missing array " + name);
  if (a->shape != shape)
    throw FormatError("checkpoint: array " + name + " has unexpected shape");
  dest.assign(a->data.begin(), a->data.end());
}

}  // namespace detail

inline MrxModel model_from_checkpoint(const Checkpoint& ck, std::uint64_t seed = 0) {
  if (ck.config.value("format", "") != "mrx-model")
    throw FormatError("checkpoint: not an mrx-model checkpoint");
  MrxModel model = MrxModel::create(MrxConfig::from_json(ck.config.at("model")), seed);
  const auto pull_var = [&ck](const std::string& name, const nn::Var& v) {
    detail::fill_from_checkpoint(ck, name, v->value, v->shape);
  };
  const auto pull_bn = [&](const std::string& prefix, nn::BatchNorm& bn) {
    pull_var(prefix + ".gamma", bn.gamma);
    pull_var(prefix + ".beta", bn.beta);
    const auto f = static_cast<std::int64_t>(bn.state.running_mean.size());
    detail::fill_from_checkpoint(ck, prefix + ".running_mean", bn.state.running_mean, {f});
    detail::fill_from_checkpoint(ck, prefix + ".running_var", bn.state.running_var, {f});
  };
  for (std::size_t i = 0; i < model.encoders.size(); ++i) {
    const std::string p = "enc" + std::to_string(i);
    pull_var(p + ".fc.weight", model.encoders[i].fc.weight);
    pull_bn(p + ".bn", model.encoders[i].bn);
  }
  for (std::size_t s = 0; s < model.stacks.size(); ++s)
    for (std::size_t l = 0; l < model.stacks[s].size(); ++l) {
      const std::string p =
          "stack" + std::to_string(s) + ".layer" + std::to_string(l);
      auto& layer = model.stacks[s][l];
      pull_var(p + ".fwd.wx", layer.fwd.wx);
      pull_var(p + ".fwd.wh", layer.fwd.wh);
      pull_var(p + ".fwd.b", layer.fwd.b);
      pull_var(p + ".bwd.wx", layer.bwd.wx);
      pull_var(p + ".bwd.wh", layer.bwd.wh);
      pull_var(p + ".bwd.b", layer.bwd.b);
    }
  for (std::size_t i = 0; i < model.decoders.size(); ++i) {
    const std::string p = "dec" + std::to_string(i);
    pull_var(p + ".fc1.weight", model.decoders[i].fc1.weight);
    pull_bn(p + ".bn1", model.decoders[i].bn1);
    pull_var(p + ".fc2.weight", model.decoders[i].fc2.weight);
    pull_bn(p + ".bn2", model.decoders[i].bn2);
  }
  return model;
}

// Quantizes live parameters and statistics to their float32 checkpoint
// values, so a training run continued in-process matches one resumed from
// the file bit for bit.
inline void quantize_to_float32(MrxModel& model) {
  for (auto& p : model.parameters())
    for (double& v : p->value) v = static_cast<double>(static_cast<float>(v));
  const auto snap = [](std::vector<double>& xs) {
    for (double& v : xs) v = static_cast<double>(static_cast<float>(v));
  };
  for (auto& e : model.encoders) {
    snap(e.bn.state.running_mean);
    snap(e.bn.state.running_var);
  }
  for (auto& d : model.decoders) {
    snap(d.bn1.state.running_mean);
    snap(d.bn1.state.running_var);
    snap(d.bn2.state.running_mean);
    snap(d.bn2.state.running_var);
  }
}

}  // namespace mrx

#endif  // MRX_MODEL_HPP
