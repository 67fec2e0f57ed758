#include "lexspec/encoder.h"

#include <cmath>
#include <cstring>
#include <numeric>

#include "lexspec/error.h"
#include "lexspec/rng.h"

namespace lexspec {

std::string_view to_string(FineTuneMode mode) {
  return mode == FineTuneMode::kFull ? "full" : "adapter";
}

FineTuneMode parse_fine_tune_mode(std::string_view text) {
  if (text == "full") return FineTuneMode::kFull;
  if (text == "adapter") return FineTuneMode::kAdapter;
  throw ValidationError("unknown fine-tuning mode '" + std::string(text) +
                        "' (expected full or adapter)");
}

void EncoderConfig::validate() const {
  if (dim == 0) throw ValidationError("encoder: dim must be positive");
  if (ffn_dim == 0) throw ValidationError("encoder: ffn_dim must be positive");
  if (max_sequence_length < 3) {
    throw ValidationError("encoder: max_sequence_length must be at least 3");
  }
  if (mode == FineTuneMode::kAdapter) {
    if (adapter_bottleneck == 0 || adapter_bottleneck >= dim) {
      throw ValidationError("encoder: adapter bottleneck must be in [1, dim)");
    }
  }
}

std::vector<bool> WordEncoding::pooling_mask() const {
  std::vector<bool> mask(framing.ids.size(), false);
  for (std::size_t p : framing.pooled_positions) mask.at(p) = true;
  return mask;
}

EncoderModel::EncoderModel(EncoderConfig config, SubwordVocabulary vocab)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  const std::size_t d = config_.dim;
  const std::size_t f = config_.ffn_dim;
  embeddings_ = Tensor::zeros({vocab_.size(), d});
  positions_ = Tensor::zeros({config_.max_sequence_length, d});
  layers_.resize(config_.num_layers);
  for (auto& layer : layers_) {
    layer.query = Tensor::zeros({d, d});
    layer.key = Tensor::zeros({d, d});
    layer.value = Tensor::zeros({d, d});
    layer.output = Tensor::zeros({d, d});
    layer.ffn_in = Tensor::zeros({d, f});
    layer.ffn_in_bias = Tensor::zeros({1, f});
    layer.ffn_out = Tensor::zeros({f, d});
    layer.ffn_out_bias = Tensor::zeros({1, d});
    if (config_.mode == FineTuneMode::kAdapter) {
      const std::size_t b = config_.adapter_bottleneck;
      layer.adapter = AdapterParameters{Tensor::zeros({d, b}), Tensor::zeros({1, b}),
                                        Tensor::zeros({b, d}), Tensor::zeros({1, d})};
    }
  }
  apply_trainable_flags();
}

EncoderModel::EncoderModel(const EncoderModel& other)
    : config_(other.config_), vocab_(other.vocab_) {
  embeddings_ = other.embeddings_.clone();
  positions_ = other.positions_.clone();
  layers_.reserve(other.layers_.size());
  for (const auto& src : other.layers_) {
    LayerParameters l;
    l.query = src.query.clone();
    l.key = src.key.clone();
    l.value = src.value.clone();
    l.output = src.output.clone();
    l.ffn_in = src.ffn_in.clone();
    l.ffn_in_bias = src.ffn_in_bias.clone();
    l.ffn_out = src.ffn_out.clone();
    l.ffn_out_bias = src.ffn_out_bias.clone();
    if (src.adapter) {
      l.adapter = AdapterParameters{src.adapter->down.clone(), src.adapter->down_bias.clone(),
                                    src.adapter->up.clone(), src.adapter->up_bias.clone()};
    }
    layers_.push_back(std::move(l));
  }
}

EncoderModel& EncoderModel::operator=(const EncoderModel& other) {
  if (this != &other) {
    EncoderModel copy(other);
    *this = std::move(copy);
  }
  return *this;
}

std::vector<NamedTensor> EncoderModel::named_tensors() const {
  std::vector<NamedTensor> out;
  out.push_back({"embeddings", embeddings_});
  out.push_back({"positions", positions_});
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string p = "layer." + std::to_string(i) + ".";
    const auto& l = layers_[i];
    out.push_back({p + "attention.query", l.query});
    out.push_back({p + "attention.key", l.key});
    out.push_back({p + "attention.value", l.value});
    out.push_back({p + "attention.output", l.output});
    out.push_back({p + "ffn.in.weight", l.ffn_in});
    out.push_back({p + "ffn.in.bias", l.ffn_in_bias});
    out.push_back({p + "ffn.out.weight", l.ffn_out});
    out.push_back({p + "ffn.out.bias", l.ffn_out_bias});
    if (l.adapter) {
      out.push_back({p + "adapter.down.weight", l.adapter->down});
      out.push_back({p + "adapter.down.bias", l.adapter->down_bias});
      out.push_back({p + "adapter.up.weight", l.adapter->up});
      out.push_back({p + "adapter.up.bias", l.adapter->up_bias});
    }
  }
  return out;
}

std::vector<NamedTensor> EncoderModel::trainable_parameters() const {
  std::vector<NamedTensor> out;
  for (auto& nt : named_tensors()) {
    if (nt.tensor.requires_grad()) out.push_back(std::move(nt));
  }
  return out;
}

void EncoderModel::apply_trainable_flags() {
  const bool full = config_.mode == FineTuneMode::kFull;
  for (auto& nt : named_tensors()) {
    const bool is_adapter = nt.name.find(".adapter.") != std::string::npos;
    nt.tensor.set_requires_grad(full || is_adapter);
  }
}

namespace {

std::vector<TokenId> word_pieces(const SubwordVocabulary& vocab, std::string_view word) {
  if (word.empty()) throw ValidationError("encoder: empty word");
  if (contains_whitespace(word)) {
    throw ValidationError("encoder: word contains whitespace: '" + std::string(word) + "'");
  }
  return vocab.tokenize(word);
}

}  // namespace

Framing EncoderModel::frame_type(std::string_view word) const {
  const auto pieces = word_pieces(vocab_, word);
  if (pieces.size() + 2 > config_.max_sequence_length) {
    throw ValidationError("encoder: sequence too long for '" + std::string(word) + "' (" +
                          std::to_string(pieces.size() + 2) + " > " +
                          std::to_string(config_.max_sequence_length) + ")");
  }
  Framing f;
  f.ids.push_back(SubwordVocabulary::kSpec1);
  f.ids.insert(f.ids.end(), pieces.begin(), pieces.end());
  f.ids.push_back(SubwordVocabulary::kSpec2);
  f.pooled_positions.resize(pieces.size());
  std::iota(f.pooled_positions.begin(), f.pooled_positions.end(), std::size_t{1});
  return f;
}

Framing EncoderModel::frame_sense(std::string_view word, std::string_view gloss) const {
  const auto pieces = word_pieces(vocab_, word);
  const std::size_t m = pieces.size();
  if (m + 3 > config_.max_sequence_length) {
    throw ValidationError("encoder: sequence too long for '" + std::string(word) + "' (" +
                          std::to_string(m + 3) + " > " +
                          std::to_string(config_.max_sequence_length) + ")");
  }
  auto gloss_ids = vocab_.tokenize_text(gloss);
  const std::size_t room = config_.max_sequence_length - m - 3;
  if (gloss_ids.size() > room) gloss_ids.resize(room);
  Framing f;
  f.ids.push_back(SubwordVocabulary::kSpec1);
  f.ids.insert(f.ids.end(), pieces.begin(), pieces.end());
  f.ids.push_back(SubwordVocabulary::kSpec2);
  f.ids.insert(f.ids.end(), gloss_ids.begin(), gloss_ids.end());
  f.ids.push_back(SubwordVocabulary::kSpec2);
  f.pooled_positions.resize(m);
  std::iota(f.pooled_positions.begin(), f.pooled_positions.end(), std::size_t{1});
  return f;
}

Framing EncoderModel::frame_sentence(std::string_view sentence) const {
  auto ids = vocab_.tokenize_text(sentence);
  if (ids.empty()) throw ValidationError("encoder: empty sentence");
  if (ids.size() + 2 > config_.max_sequence_length) {
    ids.resize(config_.max_sequence_length - 2);
  }
  Framing f;
  f.ids.push_back(SubwordVocabulary::kSpec1);
  f.ids.insert(f.ids.end(), ids.begin(), ids.end());
  f.ids.push_back(SubwordVocabulary::kSpec2);
  f.pooled_positions.resize(ids.size());
  std::iota(f.pooled_positions.begin(), f.pooled_positions.end(), std::size_t{1});
  return f;
}

WordEncoding EncoderModel::encode(Tape& tape, const Framing& framing) const {
  const std::size_t n = framing.ids.size();
  if (n == 0) throw ValidationError("encoder: empty input sequence");
  if (n > config_.max_sequence_length) {
    throw ValidationError("encoder: sequence of " + std::to_string(n) +
                          " tokens exceeds max_sequence_length " +
                          std::to_string(config_.max_sequence_length));
  }
  if (framing.pooled_positions.empty()) {
    throw ValidationError("encoder: nothing to pool");
  }
  std::vector<std::size_t> pos(n);
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  const Tensor ones = Tensor::filled({n, 1}, 1.0);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config_.dim));

  auto pool = [&](const Tensor& x) {
    return tape.mean(tape.gather_rows(x, framing.pooled_positions), 0);
  };
  auto affine = [&](const Tensor& x, const Tensor& w, const Tensor& b) {
    return tape.add(tape.matmul(x, w), tape.matmul(ones, b));
  };

  WordEncoding enc;
  enc.framing = framing;
  Tensor x = tape.add(tape.gather_rows(embeddings_, framing.ids),
                      tape.gather_rows(positions_, pos));
  enc.layers.push_back(pool(x));
  for (const auto& l : layers_) {
    const Tensor v = tape.matmul(x, l.value);
    Tensor context;
    if (config_.self_attention_only) {
      context = v;
    } else {
      const Tensor q = tape.matmul(x, l.query);
      const Tensor k = tape.matmul(x, l.key);
      const Tensor scores = tape.scale(tape.matmul(q, tape.transpose(k)), inv_sqrt_d);
      context = tape.matmul(tape.softmax_rows(scores), v);
    }
    x = tape.add(x, tape.matmul(context, l.output));
    const Tensor hidden = tape.relu(affine(x, l.ffn_in, l.ffn_in_bias));
    x = tape.add(x, affine(hidden, l.ffn_out, l.ffn_out_bias));
    if (l.adapter) {
      const Tensor a = tape.relu(affine(x, l.adapter->down, l.adapter->down_bias));
      x = tape.add(x, affine(a, l.adapter->up, l.adapter->up_bias));
    }
    enc.layers.push_back(pool(x));
  }
  return enc;
}

EncoderModel init_model(const EncoderConfig& config, SubwordVocabulary vocab,
                        std::uint64_t seed) {
  EncoderModel model(config, std::move(vocab));
  Rng rng(seed);
  for (auto& nt : model.named_tensors()) {
    const bool zero_init = nt.name == "positions" ||
                           nt.name.find(".adapter.up.") != std::string::npos;
    if (zero_init) continue;
    for (double& v : nt.tensor.mutable_values()) v = rng.uniform(-0.05, 0.05);
  }
  return model;
}

EncoderModel with_fine_tune_mode(const EncoderModel& model, FineTuneMode mode,
                                 std::uint64_t seed) {
  EncoderConfig config = model.config();
  config.mode = mode;
  EncoderModel out = init_model(config, model.vocabulary(), seed);
  auto source = model.named_tensors();
  for (auto& nt : out.named_tensors()) {
    for (const auto& src : source) {
      if (src.name != nt.name) continue;
      const auto v = src.tensor.values();
      std::copy(v.begin(), v.end(), nt.tensor.mutable_values().begin());
      break;
    }
  }
  return out;
}

bool tensors_bitwise_equal(const std::vector<NamedTensor>& a,
                           const std::vector<NamedTensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].tensor.shape() != b[i].tensor.shape()) return false;
    const auto va = a[i].tensor.values();
    const auto vb = b[i].tensor.values();
    if (std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace lexspec
