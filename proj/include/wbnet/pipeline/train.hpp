#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "wbnet/nn/adam.hpp"
#include "wbnet/pipeline/model.hpp"
#include "wbnet/pipeline/target.hpp"

namespace wbnet::pipeline {

struct TrainConfig {
  nn::NetworkConfig net;
  std::size_t epochs = 501;
  std::size_t batch = 32;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  double smoothing = 0.75;
  nn::LrSchedule schedule;
  std::size_t checkpoint_every = 50;
  /// Stop after this many optimiser steps (0: no cap).
  std::int64_t max_steps = 0;

  void validate() const {
    net.validate();
    if (batch == 0) throw ConfigError("batch size must be positive");
    if (sigma < 0) throw ConfigError("noise sigma must be non-negative");
    if (!(smoothing > 0)) throw ConfigError("smoothing width must be positive");
    if (!(schedule.base > 0) || schedule.interval <= 0) throw ConfigError("invalid learning-rate schedule");
  }
};

struct HistoryRow {
  std::size_t epoch = 0;
  std::int64_t step = 0;
  double lr = 0;
  double train_loss = 0;
};

/// Mini-batch Adam on the smoothed-target loss with fresh multiplicative noise every epoch.
/// Single-threaded runs are bit-reproducible: shuffles and noise come from streams keyed
/// by (seed, epoch, sample), independent of batching.
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const Dataset& train) : cfg_(cfg), model_(cfg.net) {
    cfg.validate();
    train.check();
    if (train.size() == 0) throw DataError("empty training set");
    model_.stats = NormalizationStats::fit(train.data);
    model_.train_family = train.spec.family;
    model_.train_seeds = train.seeds;
    model_.smoothing = cfg.smoothing;
    model_.net.params().glorot_init(cfg.seed);
    adam_ = nn::AdamState<float>(model_.net.params().size());
    adam_.schedule = cfg.schedule;
    for (std::size_t k = 0; k < train.size(); ++k) {
      clean_.push_back(train.data[k]);
      targets_.push_back(smooth_target(train.eta[k], cfg.smoothing));
      network_slices(cfg.net, model_.stats, train.data[k]);  // validates shapes up front
    }
  }

  const TrainConfig& config() const { return cfg_; }
  Model& model() { return model_; }
  const Model& model() const { return model_; }
  nn::AdamState<float>& adam() { return adam_; }
  const nn::AdamState<float>& adam() const { return adam_; }
  const std::vector<HistoryRow>& history() const { return history_; }
  std::size_t epoch() const { return epoch_; }
  std::int64_t step() const { return adam_.step; }
  bool done() const { return epoch_ >= cfg_.epochs || (cfg_.max_steps > 0 && adam_.step >= cfg_.max_steps); }

  /// Continues from a checkpoint: parameters, optimiser moments and the epoch counter.
  void resume(const Model& m, const nn::AdamState<float>& adam, std::size_t epoch, std::vector<HistoryRow> history) {
    require_shape(m.net.params().size() == model_.net.params().size(), "resume: parameter count mismatch");
    model_ = m;
    adam_ = adam;
    epoch_ = epoch;
    history_ = std::move(history);
  }

  /// Noisy, standardised network input of training sample k in a given epoch.
  std::vector<ComplexGrid> noisy_view(std::size_t k, std::size_t epoch) const {
    auto rng = stream_rng(cfg_.seed, epoch, k + 1);
    return network_slices(cfg_.net, model_.stats, inject_noise(clean_.at(k), cfg_.sigma, rng));
  }

  /// Visiting order of the training samples in an epoch.
  std::vector<std::size_t> order(std::size_t epoch) const {
    std::vector<std::size_t> idx(clean_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto rng = stream_rng(cfg_.seed, epoch, 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
  }

  /// One optimiser step on the given samples; returns the batch loss before the update.
  double step_on(const std::vector<std::size_t>& samples, std::size_t epoch) {
    std::vector<std::vector<ComplexGrid>> inputs;
    std::vector<const RealGrid*> targets;
    for (std::size_t k : samples) {
      inputs.push_back(noisy_view(k, epoch));
      targets.push_back(&targets_[k]);
    }
    typename nn::WideBNet<float>::Cache cache;
    const auto in = nn::encode_batch<float>(cfg_.net, inputs);
    const Tensor<float> y = model_.net.forward(in, &cache);
    Tensor<float> dy;
    const double loss = batch_loss(y, targets, &dy);
    if (!std::isfinite(loss))
      throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + " step " +
                           std::to_string(adam_.step));
    std::vector<float> grads(model_.net.params().size(), 0.0f);
    model_.net.backward(model_.net.params().data(), grads.data(), cache, dy);
    adam_.step_registry(model_.net.params(), grads);
    return loss;
  }

  /// Runs one epoch and appends its history row (mean per-sample loss over the epoch).
  const HistoryRow& train_epoch() {
    const auto idx = order(epoch_);
    double sum = 0;
    std::size_t seen = 0;
    double lr = adam_.lr();
    for (std::size_t lo = 0; lo < idx.size(); lo += cfg_.batch) {
      if (cfg_.max_steps > 0 && adam_.step >= cfg_.max_steps) break;
      const std::vector<std::size_t> b(idx.begin() + std::ptrdiff_t(lo),
                                       idx.begin() + std::ptrdiff_t(std::min(idx.size(), lo + cfg_.batch)));
      lr = adam_.lr();
      sum += step_on(b, epoch_) * double(b.size());
      seen += b.size();
    }
    history_.push_back({epoch_, adam_.step, lr, seen ? sum / double(seen) : 0.0});
    ++epoch_;
    return history_.back();
  }

 private:
  TrainConfig cfg_;
  Model model_;
  nn::AdamState<float> adam_;
  std::vector<FarFieldCube> clean_;
  std::vector<RealGrid> targets_;
  std::vector<HistoryRow> history_;
  std::size_t epoch_ = 0;
};

/// Trains until the epoch or step budget is spent. `on_checkpoint` fires every
/// checkpoint_every epochs and after the last one; `on_epoch` may return false to stop.
inline void train(Trainer& t, const std::function<void(const Trainer&)>& on_checkpoint = {},
                  const std::function<bool(const HistoryRow&)>& on_epoch = {}) {
  const std::size_t every = t.config().checkpoint_every;
  while (!t.done()) {
    const HistoryRow& row = t.train_epoch();
    const bool more = on_epoch ? on_epoch(row) : true;
    const bool last = !more || t.done();
    if (on_checkpoint && (last || (every > 0 && t.epoch() % every == 0))) on_checkpoint(t);
    if (!more) break;
  }
}

}  // namespace wbnet::pipeline
