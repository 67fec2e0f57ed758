#include "lexspec/trainer.h"

#include <algorithm>
#include <cmath>

#include "lexspec/error.h"
#include "lexspec/report.h"
#include "lexspec/sampler.h"

namespace lexspec {

using nlohmann::json;

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void AdamWConfig::validate() const {
  if (!positive_finite(learning_rate)) throw ValidationError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("beta2 must lie in [0, 1)");
  if (!positive_finite(epsilon)) throw ValidationError("epsilon must be positive");
  if (!(std::isfinite(weight_decay) && weight_decay >= 0.0)) {
    throw ValidationError("weight decay must be non-negative");
  }
}

AdamW::AdamW(std::vector<NamedTensor> params, AdamWConfig config)
    : params_(std::move(params)), config_(config) {
  config_.validate();
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void AdamW::step() {
  for (const auto& p : params_) {
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw ValidationError("non-finite gradient in parameter '" + p.name + "'");
    }
  }
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& theta = params_[i].tensor;
    auto values = theta.mutable_values();
    const auto grad = theta.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double g = grad[k];
      m[k] = b1 * m[k] + (1.0 - b1) * g;
      v[k] = b2 * v[k] + (1.0 - b2) * g * g;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      values[k] -= config_.learning_rate *
                   (m_hat / (std::sqrt(v_hat) + config_.epsilon) + config_.weight_decay * values[k]);
    }
    theta.zero_grad();
  }
}

double relative_improvement(double current_mrr, double vanilla_mrr) {
  if (!(vanilla_mrr > 0.0)) {
    throw ValidationError("relative improvement undefined for a vanilla MRR of 0");
  }
  return (current_mrr - vanilla_mrr) / vanilla_mrr;
}

double validation_metric(const std::vector<double>& relative_improvements) {
  if (relative_improvements.empty()) throw ValidationError("validation metric needs at least one set");
  double sum = 0.0;
  for (double r : relative_improvements) sum += r;
  return sum / static_cast<double>(relative_improvements.size());
}

void TrainConfig::validate() const {
  optimizer().validate();
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
  SamplerConfig{alpha, batch_size, seed}.validate();
  LossConfig{tau, positives}.validate();
}

AdamWConfig TrainConfig::optimizer() const {
  return {learning_rate, beta1, beta2, epsilon, weight_decay};
}

std::vector<std::size_t> validation_steps(std::size_t batches_per_epoch) {
  std::vector<std::size_t> out;
  for (std::size_t q = 1; q <= 4; ++q) {
    const std::size_t s = (q * batches_per_epoch + 3) / 4;
    if (s > 0 && (out.empty() || out.back() != s)) out.push_back(s);
  }
  return out;
}

TrainLogSink json_lines_sink(std::ostream& out) {
  return [&out](const json& record) { out << format_json(record, -1) << '\n'; };
}

namespace {

Tensor encode_batch(Tape& tape, const EncoderModel& model, const Batch& batch, bool sense_level) {
  std::vector<Tensor> rows;
  rows.reserve(batch.size() * 2);
  auto encode = [&](const std::string& word, const std::optional<Gloss>& gloss) {
    if (sense_level && gloss) return model.encode_sense(tape, word, gloss->text).last();
    return model.encode_type(tape, word).last();
  };
  for (const auto& pair : batch) {
    rows.push_back(encode(pair.w1, pair.g1));
    rows.push_back(encode(pair.w2, pair.g2));
  }
  return tape.concat_rows(rows);
}

std::vector<double> validation_mrr(const EncoderModel& model, std::size_t layer,
                                   const std::vector<BliDataset>& sets) {
  std::vector<double> out;
  for (const auto& ds : sets) out.push_back(bli_mrr(model, layer, ds));
  return out;
}

json to_json(const std::vector<double>& xs) {
  json arr = json::array();
  for (double x : xs) arr.push_back(x);
  return arr;
}

}  // namespace

TrainResult train(const std::vector<ConstraintPair>& constraints, const EncoderModel& model,
                  const TrainConfig& config, const std::vector<BliDataset>& validation,
                  const TrainLogSink& log) {
  config.validate();
  if (constraints.size() < config.batch_size) {
    throw ValidationError("training needs at least batch_size (" + std::to_string(config.batch_size) +
                          ") constraints, got " + std::to_string(constraints.size()));
  }
  if (validation.empty()) throw ValidationError("training needs at least one validation set");
  const std::size_t layer = config.validation_layer.value_or(model.num_layers());
  if (layer > model.num_layers()) throw ValidationError("validation layer out of range");

  EncoderModel working = model;
  TrainResult result{model, 0.0, 0, {}, {}, {}, 0, false, {}};
  auto emit = [&](const json& record) {
    if (log) log(record);
  };

  result.vanilla_mrr = validation_mrr(working, layer, validation);
  for (double v : result.vanilla_mrr) {
    if (!(v > 0.0)) throw ValidationError("vanilla validation MRR is 0; relative improvement undefined");
  }
  emit({{"event", "vanilla"}, {"step", 0}, {"mrr", to_json(result.vanilla_mrr)}});

  const ConstraintIndex index(constraints);
  const PairDistribution q = compute_distribution(index.counts(), config.alpha);
  const SamplerConfig sampler{config.alpha, config.batch_size, config.seed};
  const LossConfig loss_config{config.tau, config.positives};
  AdamW optimizer(working.trainable_parameters(), config.optimizer());
  Rng rng(config.seed);

  const std::size_t batches_per_epoch = epoch_plan(index.total(), config.batch_size);
  const std::vector<std::size_t> checkpoints = validation_steps(batches_per_epoch);

  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs && !result.aborted; ++epoch) {
    auto next_check = checkpoints.begin();
    for (std::size_t local = 1; local <= batches_per_epoch; ++local) {
      ++step;
      const Batch batch = sample_batch(index, q, sampler, rng);
      std::vector<std::string> synsets;
      synsets.reserve(batch.size());
      for (const auto& p : batch) synsets.push_back(p.synset_id);

      Tape tape;
      const BatchEmbeddings embedded{encode_batch(tape, working, batch, config.sense_level),
                                     make_batch_entries(synsets)};
      const Tensor loss = info_nce_loss(tape, embedded, loss_config);
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        result.aborted = true;
        result.abort_reason = "non-finite loss at step " + std::to_string(step);
        emit({{"event", "abort"}, {"step", step}, {"reason", result.abort_reason}});
        break;
      }
      tape.backward(loss);
      try {
        optimizer.step();
      } catch (const ValidationError& e) {
        result.aborted = true;
        result.abort_reason = std::string(e.what()) + " at step " + std::to_string(step);
        emit({{"event", "abort"}, {"step", step}, {"reason", result.abort_reason}});
        break;
      }
      result.steps = step;
      result.losses.push_back(loss_value);
      emit({{"event", "step"}, {"step", step}, {"epoch", epoch}, {"loss", loss_value}});

      if (next_check == checkpoints.end() || *next_check != local) continue;
      ++next_check;
      ValidationEvent ev;
      ev.step = step;
      ev.epoch = epoch;
      ev.mrr = validation_mrr(working, layer, validation);
      for (std::size_t i = 0; i < ev.mrr.size(); ++i) {
        ev.relative_improvements.push_back(relative_improvement(ev.mrr[i], result.vanilla_mrr[i]));
      }
      ev.metric = validation_metric(ev.relative_improvements);
      const bool improved = ev.metric > result.best_metric;
      if (improved) {
        result.best_metric = ev.metric;
        result.best_step = step;
        result.best_model = working;
      }
      emit({{"event", "validation"},
            {"step", step},
            {"epoch", epoch},
            {"mrr", to_json(ev.mrr)},
            {"relative_improvement", to_json(ev.relative_improvements)},
            {"mean", ev.metric},
            {"best", improved}});
      result.events.push_back(std::move(ev));
    }
  }
  emit({{"event", "done"},
        {"steps", result.steps},
        {"best_step", result.best_step},
        {"best_metric", result.best_metric},
        {"aborted", result.aborted}});
  return result;
}

}  // namespace lexspec
