// Copyright 2026 The MRX Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MRX_TRAIN_HPP
#define MRX_TRAIN_HPP

#include <algorithm>
#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "mrx/metrics.hpp"
#include "mrx/model.hpp"
#include "mrx/nn/optim.hpp"
#include "mrx/nn/signal_ops.hpp"
#include "mrx/rng.hpp"
#include "mrx/wav_io.hpp"

namespace mrx {

struct TrainExample {
  AudioBuffer mixture;
  std::array<AudioBuffer, 3> stems;  // music, speech, sfx
};

struct TrainDataset {
  std::vector<TrainExample> examples;

  // Loads every mixture directory (mix.wav + music/speech/sfx.wav) under
  // root, in lexicographic order.
  static TrainDataset from_directory(const std::string& root, int expected_rate) {
    namespace fs = std::filesystem;
    TrainDataset ds;
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root))
      if (entry.is_directory() && fs::exists(entry.path() / "mix.wav"))
        dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
      TrainExample ex;
      ex.mixture = read_wav((dir / "mix.wav").string());
      ex.stems[0] = read_wav((dir / "music.wav").string());
      ex.stems[1] = read_wav((dir / "speech.wav").string());
      ex.stems[2] = read_wav((dir / "sfx.wav").string());
      if (ex.mixture.sample_rate != expected_rate)
        throw ValidationError("dataset mixture " + (dir / "mix.wav").string() +
                              " rate != expected " + std::to_string(expected_rate));
      ds.examples.push_back(std::move(ex));
    }
    if (ds.examples.empty())
      throw ValidationError("dataset directory has no mixture subdirectories: " + root);
    return ds;
  }

  struct ChunkRef {
    std::size_t example;
    std::size_t offset;
    std::size_t length;
  };

  // Consecutive non-overlapping chunks; an example shorter than one chunk
  // contributes itself whole.
  std::vector<ChunkRef> chunks(std::size_t chunk_samples) const {
    std::vector<ChunkRef> out;
    for (std::size_t e = 0; e < examples.size(); ++e) {
      const std::size_t len = examples[e].mixture.size();
      if (len < chunk_samples) {
        if (len > 0) out.push_back({e, 0, len});
        continue;
      }
      for (std::size_t off = 0; off + chunk_samples <= len; off += chunk_samples)
        out.push_back({e, off, chunk_samples});
    }
    return out;
  }
};

// Chunk loss: mean over sources of -SI-SDR(x_hat_j, x_j); a source silent
// in the reference chunk contributes its leaked-energy dB instead, keeping
// the objective defined on sparse chunks.
inline nn::Var chunk_loss(MrxModel& model, const AudioBuffer& mix_chunk,
                          const std::array<std::vector<double>, 3>& ref_chunks, bool train) {
  auto ctx = forward(model, mix_chunk, train);
  nn::Var total;
  for (int j = 0; j < model.config.num_sources; ++j) {
    double ref_energy = 0.0;
    for (double v : ref_chunks[j]) ref_energy += v * v;
    nn::Var term;
    if (ref_energy > kMetricEps) {
      auto ref = std::make_shared<std::vector<double>>(ref_chunks[j]);
      term = nn::scale(nn::si_sdr_node(ctx.stems[j], ref), -1.0);
    } else {
      term = nn::energy_db_node(ctx.stems[j]);
    }
    total = total ? nn::add(total, term) : term;
  }
  return nn::scale(total, 1.0 / model.config.num_sources);
}

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;

  nlohmann::json to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : epochs)
      out.push_back({{"epoch", e.epoch},
                     {"train_loss", e.train_loss},
                     {"val_loss", e.val_loss},
                     {"lr", e.lr}});
    return {{"epochs", out}};
  }
};

struct TrainOptions {
  int epochs = 10;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string checkpoint_dir;  // empty: no checkpoints written
};

class Trainer {
 public:
  Trainer(MrxModel model, const TrainOptions& options)
      : model_(std::move(model)),
        adam_(model_.parameters()),
        options_(options) {
    scheduler_.lr = options.lr;
  }

  MrxModel& model() { return model_; }
  const TrainHistory& history() const { return history_; }
  int epochs_done() const { return epochs_done_; }
  double lr() const { return scheduler_.lr; }

  static std::array<std::vector<double>, 3> slice_refs(const TrainExample& ex,
                                                       std::size_t offset,
                                                       std::size_t length) {
    std::array<std::vector<double>, 3> out;
    for (int j = 0; j < 3; ++j)
      out[j].assign(ex.stems[j].samples.begin() + offset,
                    ex.stems[j].samples.begin() + offset + length);
    return out;
  }

  // One optimization step on one chunk; returns the loss value.
  double step(const AudioBuffer& mix_chunk,
              const std::array<std::vector<double>, 3>& refs) {
    nn::Var loss = chunk_loss(model_, mix_chunk, refs, true);
    adam_.zero_grad();
    nn::backward(loss);
    adam_.step(scheduler_.lr);
    return loss->value[0];
  }

  // Full training run. Chunk order is reshuffled per epoch from
  // Rng(seed).child(epoch), so a resumed run sees the same order.
  void fit(const TrainDataset& train_ds, const TrainDataset* val_ds, int epochs) {
    const auto chunk_samples = static_cast<std::size_t>(model_.config.chunk_samples());
    const auto train_chunks = train_ds.chunks(chunk_samples);
    if (train_chunks.empty()) throw ValidationError("training dataset yields no chunks");
    const auto val_chunks =
        val_ds != nullptr ? val_ds->chunks(chunk_samples) : std::vector<TrainDataset::ChunkRef>{};

    for (int e = 0; e < epochs; ++e) {
      const int epoch = ++epochs_done_;
      auto order = train_chunks;
      shuffle(order, Rng(options_.seed).child(static_cast<std::uint64_t>(epoch)));

      double train_loss = 0.0;
      for (const auto& c : order) {
        const TrainExample& ex = train_ds.examples[c.example];
        AudioBuffer mix_chunk;
        mix_chunk.sample_rate = ex.mixture.sample_rate;
        mix_chunk.samples.assign(ex.mixture.samples.begin() + c.offset,
                                 ex.mixture.samples.begin() + c.offset + c.length);
        train_loss += step(mix_chunk, slice_refs(ex, c.offset, c.length));
      }
      train_loss /= static_cast<double>(order.size());

      double val_loss = train_loss;
      if (!val_chunks.empty()) {
        val_loss = 0.0;
        for (const auto& c : val_chunks) {
          const TrainExample& ex = val_ds->examples[c.example];
          AudioBuffer mix_chunk;
          mix_chunk.sample_rate = ex.mixture.sample_rate;
          mix_chunk.samples.assign(ex.mixture.samples.begin() + c.offset,
                                   ex.mixture.samples.begin() + c.offset + c.length);
          val_loss += chunk_loss(model_, mix_chunk, slice_refs(ex, c.offset, c.length),
                                 false)
                          ->value[0];
        }
        val_loss /= static_cast<double>(val_chunks.size());
      }

      EpochStats stats;
      stats.epoch = epoch;
      stats.train_loss = train_loss;
      stats.val_loss = val_loss;
      stats.lr = scheduler_.lr;  // rate used during this epoch
      history_.epochs.push_back(stats);
      scheduler_.on_epoch(val_loss);

      if (!options_.checkpoint_dir.empty()) save_checkpoint(epoch);
    }
  }

  // Checkpoint with optimizer and scheduler state appended; the live model
  // and moments are quantized to the stored float32 values afterwards so
  // continuing in-process equals resuming from the file.
  void save_checkpoint(int epoch) {
    namespace fs = std::filesystem;
    fs::create_directories(options_.checkpoint_dir);
    const std::string path = options_.checkpoint_dir + "/checkpoint_epoch" +
                             std::to_string(epoch) + ".mrxckpt";
    Checkpoint ck = trainer_checkpoint(epoch);
    ck.save(path);
    ck.save(options_.checkpoint_dir + "/checkpoint_latest.mrxckpt");
    quantize_state();
  }

  Checkpoint trainer_checkpoint(int epoch) {
    Checkpoint ck = model_to_checkpoint(model_);
    ck.config["trainer"] = {{"epoch", epoch},
                            {"lr", scheduler_.lr},
                            {"best", scheduler_.best},
                            {"bad_epochs", scheduler_.bad_epochs},
                            {"adam_t", adam_.t},
                            {"seed", options_.seed}};
    for (std::size_t i = 0; i < adam_.params.size(); ++i) {
      const auto shape = adam_.params[i]->shape;
      CheckpointArray m, v;
      m.name = "adam.m." + std::to_string(i);
      m.shape = shape;
      m.data.assign(adam_.m[i].begin(), adam_.m[i].end());
      v.name = "adam.v." + std::to_string(i);
      v.shape = shape;
      v.data.assign(adam_.v[i].begin(), adam_.v[i].end());
      ck.arrays.push_back(std::move(m));
      ck.arrays.push_back(std::move(v));
    }
    return ck;
  }

  static Trainer resume(const Checkpoint& ck, const TrainOptions& options) {
    MrxModel model = model_from_checkpoint(ck);
    Trainer t(std::move(model), options);
    const auto& js = ck.config.at("trainer");
    t.epochs_done_ = js.at("epoch").get<int>();
    t.scheduler_.lr = js.at("lr").get<double>();
    t.scheduler_.best = js.at("best").get<double>();
    t.scheduler_.bad_epochs = js.at("bad_epochs").get<int>();
    t.adam_.t = js.at("adam_t").get<std::int64_t>();
    for (std::size_t i = 0; i < t.adam_.params.size(); ++i) {
      const CheckpointArray* m = ck.find("adam.m." + std::to_string(i));
      const CheckpointArray* v = ck.find("adam.v." + std::to_string(i));
      if (m == nullptr || v == nullptr)
        throw FormatError("checkpoint: missing optimizer state for resume");
      t.adam_.m[i].assign(m->data.begin(), m->data.end());
      t.adam_.v[i].assign(v->data.begin(), v->data.end());
    }
    return t;
  }

 private:
  void quantize_state() {
    quantize_to_float32(model_);
    for (auto& buf : adam_.m)
      for (double& x : buf) x = static_cast<double>(static_cast<float>(x));
    for (auto& buf : adam_.v)
      for (double& x : buf) x = static_cast<double>(static_cast<float>(x));
  }

  template <typename T>
  static void shuffle(std::vector<T>& xs, Rng rng) {
    for (std::size_t i = xs.size(); i > 1; --i)
      std::swap(xs[i - 1], xs[rng.uniform_index(i)]);
  }

  MrxModel model_;
  nn::Adam adam_;
  nn::PlateauScheduler scheduler_;
  TrainOptions options_;
  TrainHistory history_;
  int epochs_done_ = 0;
};

}  // namespace mrx

#endif  // MRX_TRAIN_HPP
