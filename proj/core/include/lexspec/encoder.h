#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lexspec/autodiff.h"
#include "lexspec/tokenizer.h"

namespace lexspec {

enum class FineTuneMode { kFull, kAdapter };

std::string_view to_string(FineTuneMode mode);
FineTuneMode parse_fine_tune_mode(std::string_view text);

struct EncoderConfig {
  std::size_t dim = 48;
  std::size_t num_layers = 2;
  std::size_t ffn_dim = 96;
  // Reduction ratio 16 over the model width, rounded up.
  std::size_t adapter_bottleneck = 3;
  FineTuneMode mode = FineTuneMode::kFull;
  std::size_t max_sequence_length = 32;
  // Diagnostic switch: every token attends only to itself.
  bool self_attention_only = false;

  static std::size_t default_bottleneck(std::size_t dim) { return (dim + 15) / 16; }
  void validate() const;
};

struct AdapterParameters {
  Tensor down;       // d x b
  Tensor down_bias;  // 1 x b
  Tensor up;         // b x d, zero at initialization
  Tensor up_bias;    // 1 x d, zero at initialization
};

struct LayerParameters {
  Tensor query;   // d x d
  Tensor key;     // d x d
  Tensor value;   // d x d
  Tensor output;  // d x d
  Tensor ffn_in;        // d x ffn
  Tensor ffn_in_bias;   // 1 x ffn
  Tensor ffn_out;       // ffn x d
  Tensor ffn_out_bias;  // 1 x d
  std::optional<AdapterParameters> adapter;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Token sequence fed to the encoder plus the positions that are mean-pooled.
struct Framing {
  std::vector<TokenId> ids;
  std::vector<std::size_t> pooled_positions;
};

// Pooled representation of one input at every depth: layers[0] is the pooled
// embedding output, layers[l] the pooled output of block l. Each is 1 x d and
// connected to the tape it was computed on.
struct WordEncoding {
  std::vector<Tensor> layers;
  Framing framing;

  const Tensor& last() const { return layers.back(); }
  // True at the positions that contribute to the pooled vectors.
  std::vector<bool> pooling_mask() const;
};

// Single-head transformer encoder without layer normalization:
//   x  = E[ids] + P[0..n)
//   x += softmax(x Wq (x Wk)^T / sqrt(d)) (x Wv) Wo
//   x += relu(x W1 + b1) W2 + b2
//   x += relu(x Ad + ad) Au + au          (adapter mode only)
//
// Copies are deep: a copied model owns independent parameter storage.
class EncoderModel {
 public:
  // All parameters zero; see init_model for the randomized constructor.
  EncoderModel(EncoderConfig config, SubwordVocabulary vocab);

  EncoderModel(const EncoderModel& other);
  EncoderModel& operator=(const EncoderModel& other);
  EncoderModel(EncoderModel&&) noexcept = default;
  EncoderModel& operator=(EncoderModel&&) noexcept = default;

  const EncoderConfig& config() const { return config_; }
  const SubwordVocabulary& vocabulary() const { return vocab_; }
  std::size_t num_layers() const { return layers_.size(); }

  Tensor& embeddings() { return embeddings_; }
  const Tensor& embeddings() const { return embeddings_; }
  Tensor& positions() { return positions_; }
  const Tensor& positions() const { return positions_; }
  LayerParameters& layer(std::size_t i) { return layers_.at(i); }
  const LayerParameters& layer(std::size_t i) const { return layers_.at(i); }

  // Every tensor in checkpoint order.
  std::vector<NamedTensor> named_tensors() const;
  // Full mode: every tensor. Adapter mode: adapter tensors only.
  std::vector<NamedTensor> trainable_parameters() const;

  // [SPEC1] sw_1..sw_m [SPEC2], pooled over sw_1..sw_m.
  Framing frame_type(std::string_view word) const;
  // [SPEC1] sw_1..sw_m [SPEC2] g [SPEC2], pooled over sw_1..sw_m. The gloss
  // is truncated from the right to fit; the word never is.
  Framing frame_sense(std::string_view word, std::string_view gloss) const;
  // [SPEC1] t_1..t_n [SPEC2], pooled over all t_i, truncated from the right.
  Framing frame_sentence(std::string_view sentence) const;

  WordEncoding encode(Tape& tape, const Framing& framing) const;
  WordEncoding encode_type(Tape& tape, std::string_view word) const {
    return encode(tape, frame_type(word));
  }
  WordEncoding encode_sense(Tape& tape, std::string_view word,
                            std::string_view gloss) const {
    return encode(tape, frame_sense(word, gloss));
  }
  WordEncoding encode_sentence(Tape& tape, std::string_view sentence) const {
    return encode(tape, frame_sentence(sentence));
  }

 private:
  void apply_trainable_flags();

  EncoderConfig config_;
  SubwordVocabulary vocab_;
  Tensor embeddings_;  // |V| x d
  Tensor positions_;   // max_sequence_length x d
  std::vector<LayerParameters> layers_;
};

// Uniform(-0.05, 0.05) initialization from `seed`. The position table and the
// adapter up-projections start at zero, so a fresh adapter is an identity
// residual and layer-0 vectors equal the pooled embedding rows.
EncoderModel init_model(const EncoderConfig& config, SubwordVocabulary vocab,
                        std::uint64_t seed);

// The same weights under another fine-tuning mode. Adapters that `model`
// lacks are initialized as in init_model from `seed`; surplus ones are dropped.
EncoderModel with_fine_tune_mode(const EncoderModel& model, FineTuneMode mode,
                                 std::uint64_t seed);

// Classic text embedding format: "<count> <dim>" header, then
// "word v1 ... vd" per line. Rows of vocabulary tokens that match a word
// exactly are overwritten. Returns the number of rows overwritten.
std::size_t load_word_vectors(const std::filesystem::path& path,
                              EncoderModel& model);

// Checkpoint directory layout:
//   manifest.json  ordered [{"name", "shape"}]
//   weights.bin    little-endian float64, row-major, manifest order
//   config.json    encoder configuration
//   vocab.txt      regular vocabulary tokens
void save_checkpoint(const EncoderModel& model, const std::filesystem::path& dir);
EncoderModel load_checkpoint(const std::filesystem::path& dir);

// Byte-level equality of two tensor lists (names, shapes and values).
bool tensors_bitwise_equal(const std::vector<NamedTensor>& a,
                           const std::vector<NamedTensor>& b);

}  // namespace lexspec
