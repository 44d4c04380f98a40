#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <random>
#include <vector>

#include "liwuda/nn.hpp"
#include "liwuda/ot.hpp"
#include "liwuda/settings.hpp"
#include "liwuda/synth.hpp"

namespace liwuda::train {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double learning_rate = 0.02;
  double momentum = 0.9;
  double weight_decay = 0.005;
  ot::SolverChoice solver{};
  std::size_t hidden_width = 64;
  std::size_t feature_dim = 16;
  std::uint64_t seed = 0;

  // Throws ConfigError (batch_size >= 2, epochs >= 1, positive learning rate...).
  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;
  double l_c = 0.0;
  double l_wot = 0.0;
  double l_sa = 0.0;
  double l_iot = 0.0;
  double total = 0.0;
  bool converged = true;
  double millis = 0.0;
};

struct TrainHistory {
  std::vector<StepRecord> steps;

  // Header "step,l_c,l_wot,l_sa,l_iot,total,converged,millis"; reals "%.17g",
  // converged as 0/1.
  void write_csv(std::ostream& out) const;
  static TrainHistory read_csv(std::istream& in);
};

/// Shuffled pass over [0, n); each epoch visits every index exactly once. The
/// last batch of an epoch holds the remainder when n is not a multiple of the
/// batch size.
class EpochSampler {
 public:
  EpochSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);

  std::vector<std::size_t> next_batch();
  std::size_t batches_per_epoch() const;

 private:
  void reshuffle();

  std::size_t n_;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

struct TrainResult {
  nn::Model model;
  TrainHistory history;
};

// Called after every step with the record just appended.
using StepObserver = std::function<void(const StepRecord&)>;

/// Mini-batch alternating optimization: per step, solve the couplings for the
/// current features and weights, evaluate the losses, then update all three
/// networks with the couplings held fixed.
TrainResult train(const data::DomainDataset& source, const data::UnlabeledView& target,
                  const SettingPlan& plan, const TrainConfig& config,
                  const StepObserver& observer = {});

}  // namespace liwuda::train
