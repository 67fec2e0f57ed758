#pragma once

// Finite-difference checks over every autodiff primitive and over the full
// InfoNCE-over-encoder composition.

#include <functional>
#include <string>
#include <vector>

#include "lexspec/autodiff.h"
#include "lexspec/encoder.h"
#include "lexspec/objective.h"
#include "lexspec/rng.h"

namespace gradsuite {

using lexspec::Rng;
using lexspec::Shape;
using lexspec::Tape;
using lexspec::Tensor;

struct Case {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t entries = 0;
};

// Entries drawn from [lo, hi] with |x| >= 0.1, keeping relu inputs away from
// the kink.
inline Tensor param(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape.numel());
  for (double& x : v) {
    do {
      x = rng.uniform(lo, hi);
    } while (x > -0.1 && x < 0.1);
  }
  return Tensor::from(shape, std::move(v), true);
}

// Weighted reduction so that per-entry gradient errors cannot cancel.
inline Tensor reduce(Tape& t, const Tensor& x) {
  std::vector<double> w(x.numel());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.25 + 0.31 * static_cast<double>((i * 5) % 11);
  return t.mean(t.mean(t.mul(x, Tensor::from(x.shape(), std::move(w))), 0), 1);
}

inline Case check(const std::string& name, std::vector<Tensor> params,
                  const std::function<Tensor(Tape&)>& f) {
  const auto r = lexspec::finite_difference_check(f, params, 1e-5);
  return {name, r.max_relative_error, r.entries_checked};
}

inline std::vector<Case> primitive_cases() {
  Rng rng(2024);
  std::vector<Case> out;
  {
    Tensor a = param({4, 3}, rng);
    const std::vector<std::size_t> idx = {2, 0, 2, 3};
    out.push_back(check("gather_rows", {a}, [=](Tape& t) { return reduce(t, t.gather_rows(a, idx)); }));
  }
  {
    Tensor a = param({3, 4}, rng), b = param({4, 2}, rng);
    out.push_back(check("matmul", {a, b}, [=](Tape& t) { return reduce(t, t.matmul(a, b)); }));
  }
  {
    Tensor a = param({3, 4}, rng);
    out.push_back(check("transpose", {a}, [=](Tape& t) { return reduce(t, t.transpose(a)); }));
  }
  {
    Tensor a = param({2, 3}, rng), b = param({2, 3}, rng);
    out.push_back(check("add", {a, b}, [=](Tape& t) { return reduce(t, t.add(a, b)); }));
    out.push_back(check("sub", {a, b}, [=](Tape& t) { return reduce(t, t.sub(a, b)); }));
    out.push_back(check("mul", {a, b}, [=](Tape& t) { return reduce(t, t.mul(a, b)); }));
    out.push_back(check("scale", {a}, [=](Tape& t) { return reduce(t, t.scale(a, -1.7)); }));
    out.push_back(check("relu", {a}, [=](Tape& t) { return reduce(t, t.relu(a)); }));
    out.push_back(check("exp", {a}, [=](Tape& t) { return reduce(t, t.exp(a)); }));
  }
  {
    Tensor a = param({2, 3}, rng, 0.2, 2.0);
    out.push_back(check("log", {a}, [=](Tape& t) { return reduce(t, t.log(a)); }));
  }
  {
    Tensor a = param({3, 5}, rng, -2.0, 2.0);
    out.push_back(check("softmax_rows", {a}, [=](Tape& t) { return reduce(t, t.softmax_rows(a)); }));
    out.push_back(check("mean_axis0", {a}, [=](Tape& t) { return reduce(t, t.mean(a, 0)); }));
    out.push_back(check("mean_axis1", {a}, [=](Tape& t) { return reduce(t, t.mean(a, 1)); }));
    out.push_back(check("l2_normalize_rows", {a}, [=](Tape& t) { return reduce(t, t.l2_normalize_rows(a)); }));
  }
  {
    Tensor a = param({2, 3}, rng), b = param({1, 3}, rng);
    out.push_back(check("concat_rows", {a, b}, [=](Tape& t) {
      const std::vector<Tensor> parts = {a, b, a};
      return reduce(t, t.concat_rows(parts));
    }));
  }
  {
    Tensor a = param({1, 4}, rng), b = param({1, 4}, rng);
    out.push_back(check("cosine", {a, b}, [=](Tape& t) { return t.cosine(a, b); }));
  }
  return out;
}

// Vocabulary of whole words plus a few subword pieces and gloss words.
inline lexspec::SubwordVocabulary toy_vocabulary() {
  return lexspec::SubwordVocabulary({"cat", "chat", "katze", "dog", "chien", "hund", "bat", "##s", "pl", "##ay",
                                     "an", "animal", "flying", "stick", "pet", "the", "of"});
}

struct CompositionSetup {
  std::size_t dim = 8;
  std::size_t layers = 2;
  lexspec::FineTuneMode mode = lexspec::FineTuneMode::kFull;
  bool sense_level = false;
  double tau = 0.07;
  std::uint64_t seed = 1;
};

// Loss over a 6-pair batch (two pairs share a synset) against every
// trainable parameter of a freshly initialized encoder.
inline Case composition_case(const CompositionSetup& s) {
  lexspec::EncoderConfig config;
  config.dim = s.dim;
  config.num_layers = s.layers;
  config.ffn_dim = 2 * s.dim;
  config.adapter_bottleneck = 2;
  config.mode = s.mode;
  config.max_sequence_length = 12;
  lexspec::EncoderModel model = lexspec::init_model(config, toy_vocabulary(), s.seed);

  // Larger weights than the default initialization so that activations sit
  // far from relu kinks and the adapters (zero-initialized up-projections)
  // carry gradient into their down-projections.
  Rng rng(s.seed + 100);
  for (auto& nt : model.named_tensors()) {
    for (double& v : nt.tensor.mutable_values()) {
      do {
        v = rng.uniform(-0.6, 0.6);
      } while (v > -0.05 && v < 0.05);
    }
  }

  struct Item {
    const char* w1;
    const char* g1;
    const char* w2;
    const char* g2;
    const char* syn;
  };
  const std::vector<Item> pairs = {
      {"cat", "an animal", "chat", "the pet", "s1"},   {"dog", "the pet", "hund", "an animal", "s2"},
      {"katze", "pet", "cat", "animal", "s1"},         {"bat", "flying animal", "bats", "flying", "s3"},
      {"play", "stick", "plays", "of stick", "s4"},    {"chien", "pet", "dog", "animal", "s2"},
  };
  std::vector<std::string> synsets;
  for (const auto& p : pairs) synsets.push_back(p.syn);
  const auto entries = lexspec::make_batch_entries(synsets);

  std::vector<Tensor> params;
  for (const auto& nt : model.trainable_parameters()) params.push_back(nt.tensor);

  const lexspec::LossConfig loss_config{s.tau, lexspec::PositiveSet::kAllInstances};
  auto f = [&](Tape& t) {
    std::vector<Tensor> rows;
    for (const auto& p : pairs) {
      if (s.sense_level) {
        rows.push_back(model.encode_sense(t, p.w1, p.g1).last());
        rows.push_back(model.encode_sense(t, p.w2, p.g2).last());
      } else {
        rows.push_back(model.encode_type(t, p.w1).last());
        rows.push_back(model.encode_type(t, p.w2).last());
      }
    }
    return lexspec::info_nce_loss(t, {t.concat_rows(rows), entries}, loss_config);
  };
  std::string name = std::string("loss_encoder_") + std::string(lexspec::to_string(s.mode)) +
                     (s.sense_level ? "_sense" : "_type");
  return check(name, params, f);
}

inline std::vector<Case> composition_cases() {
  std::vector<Case> out;
  for (auto mode : {lexspec::FineTuneMode::kFull, lexspec::FineTuneMode::kAdapter}) {
    for (bool sense : {false, true}) {
      CompositionSetup s;
      s.mode = mode;
      s.sense_level = sense;
      // tau = 1 keeps the loss well-conditioned for finite differences.
      s.tau = 1.0;
      out.push_back(composition_case(s));
    }
  }
  return out;
}

}  // namespace gradsuite
