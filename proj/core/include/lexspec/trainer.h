#pragma once

// Contrastive fine-tuning with AdamW, quarter-epoch validation against the
// vanilla model and best-checkpoint selection.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexspec/encoder.h"
#include "lexspec/evalsuite.h"
#include "lexspec/lexdata.h"
#include "lexspec/objective.h"

namespace lexspec {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;

  void validate() const;
};

// Decoupled weight decay:
//   m <- b1 m + (1-b1) g          v <- b2 v + (1-b2) g^2
//   theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + lambda theta)
class AdamW {
 public:
  AdamW(std::vector<NamedTensor> params, AdamWConfig config);

  // Applies one update from the accumulated gradients, then zeroes them.
  // Throws ValidationError naming the parameter if any gradient is
  // non-finite; nothing is updated in that case.
  void step();

  std::size_t steps() const { return t_; }
  const AdamWConfig& config() const { return config_; }
  const std::vector<NamedTensor>& parameters() const { return params_; }
  const std::vector<double>& first_moment(std::size_t i) const { return m_.at(i); }
  const std::vector<double>& second_moment(std::size_t i) const { return v_.at(i); }

 private:
  std::vector<NamedTensor> params_;
  AdamWConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

// (current - vanilla) / vanilla; vanilla must be positive.
double relative_improvement(double current_mrr, double vanilla_mrr);

// Mean relative improvement over the validation sets; fails on an empty list.
double validation_metric(const std::vector<double>& relative_improvements);

struct TrainConfig {
  double learning_rate = 2e-5;
  std::size_t epochs = 15;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  bool sense_level = false;
  double alpha = 0.5;
  double tau = 0.07;
  PositiveSet positives = PositiveSet::kAllInstances;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  // Layer used for validation; the last layer when unset.
  std::optional<std::size_t> validation_layer;

  void validate() const;
  AdamWConfig optimizer() const;
};

// Local steps (1-based, within an epoch) after which validation runs:
// ceil(q * batches_per_epoch / 4) for q = 1..4, duplicates removed.
std::vector<std::size_t> validation_steps(std::size_t batches_per_epoch);

struct ValidationEvent {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::vector<double> mrr;
  std::vector<double> relative_improvements;
  double metric = 0.0;
};

struct TrainResult {
  EncoderModel best_model;
  // Running maximum of the validation metric, starting from the vanilla 0.
  double best_metric = 0.0;
  // 0 when the vanilla model was never beaten.
  std::size_t best_step = 0;
  std::vector<double> vanilla_mrr;
  std::vector<ValidationEvent> events;
  std::vector<double> losses;
  std::size_t steps = 0;
  bool aborted = false;
  std::string abort_reason;
};

// Called with every log record; records are also the JSON lines of the log.
using TrainLogSink = std::function<void(const nlohmann::json&)>;

// Trains a working copy of `model` on `constraints`. Each step samples a batch
// by smoothed language-pair sampling, encodes both words of every pair (type
// level, or sense level with the pair's glosses), and applies one AdamW update
// from the InfoNCE loss. A non-finite loss or gradient stops training; the
// best checkpoint seen so far is still returned with `aborted` set.
TrainResult train(const std::vector<ConstraintPair>& constraints, const EncoderModel& model,
                  const TrainConfig& config, const std::vector<BliDataset>& validation,
                  const TrainLogSink& log = {});

// Sink writing one compact JSON object per line.
TrainLogSink json_lines_sink(std::ostream& out);

}  // namespace lexspec
