#pragma once

// Bilingual lexicon induction (MRR), cross-lingual word similarity (Spearman)
// and sentence retrieval (accuracy), at one layer or swept over all layers.
//
// Ties are always broken by candidate order: a candidate listed earlier wins.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexspec/encoder.h"

namespace lexspec {

// Dense row-major matrix of embeddings.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * dim, dim}; }
};

struct BliQuery {
  std::string source;
  std::vector<std::string> golds;
};

struct BliDataset {
  std::string id;
  std::string src_lang;
  std::string tgt_lang;
  std::vector<BliQuery> queries;
  std::vector<std::string> target_vocabulary;

  // Throws ValidationError if empty or a gold target is outside the vocabulary.
  void validate() const;
};

// Groups (source, gold) pairs by source in first-appearance order.
BliDataset make_bli_dataset(std::string id, const std::vector<std::pair<std::string, std::string>>& pairs,
                            std::vector<std::string> target_vocabulary);
// Test file "source<TAB>target" per line; vocabulary file one word per line.
BliDataset load_bli_dataset(const std::filesystem::path& test_file,
                            const std::filesystem::path& vocab_file);

struct XlsimEntry {
  std::string w1;
  std::string w2;
  double score = 0.0;
};

struct XlsimDataset {
  std::string id;
  std::vector<XlsimEntry> entries;
  void validate() const;
};

// "w1<TAB>w2<TAB>score" per line.
XlsimDataset load_xlsim_dataset(const std::filesystem::path& path);

struct RetrievalDataset {
  std::string id;
  // (foreign sentence, English sentence), paired 1:1.
  std::vector<std::pair<std::string, std::string>> pairs;
  void validate() const;
};

// "foreign<TAB>english" per line.
RetrievalDataset load_retrieval_dataset(const std::filesystem::path& path);

// --- Metrics over precomputed embeddings ------------------------------------

// 1-based rank of the best-ranked gold for every query.
std::vector<std::size_t> best_gold_ranks(const EmbeddingMatrix& queries,
                                         const EmbeddingMatrix& candidates,
                                         const std::vector<std::vector<std::size_t>>& golds);
double mean_reciprocal_rank(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                            const std::vector<std::vector<std::size_t>>& golds);
// Query i hits when its nearest candidate is candidate i.
double retrieval_accuracy(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates);

// Average ranks (1-based) with tied values sharing the mean of their positions.
std::vector<double> fractional_ranks(std::span<const double> values);
// nullopt when either side is constant (correlation undefined).
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

// --- Model-based evaluation --------------------------------------------------

// Type-level embeddings of `words`, one matrix per layer (0..num_layers).
std::vector<EmbeddingMatrix> embed_words(const EncoderModel& model,
                                         const std::vector<std::string>& words);
std::vector<EmbeddingMatrix> embed_sentences(const EncoderModel& model,
                                             const std::vector<std::string>& sentences);

double bli_mrr(const EncoderModel& model, std::size_t layer, const BliDataset& dataset);
std::optional<double> xlsim_spearman(const EncoderModel& model, std::size_t layer,
                                     const XlsimDataset& dataset);
double sentence_retrieval_accuracy(const EncoderModel& model, std::size_t layer,
                                   const RetrievalDataset& dataset);

enum class EvalTask { kBli, kXlsim, kRetrieval };
std::string_view to_string(EvalTask task);

struct EvalReport {
  EvalTask task = EvalTask::kBli;
  std::string dataset_id;
  std::string checkpoint_id;
  // Evaluated layer indices and their scores; nullopt where undefined.
  std::vector<std::size_t> layers;
  std::vector<std::optional<double>> per_layer;
  std::size_t best_layer = 0;
  std::optional<double> best_score;

  nlohmann::json to_json() const;
};

// Best layer is the argmax over defined scores, lowest index on ties.
EvalReport make_report(EvalTask task, std::string dataset_id, std::string checkpoint_id,
                       std::vector<std::size_t> layers,
                       std::vector<std::optional<double>> per_layer);

// Sweeps evaluate layers 0..num_layers; evaluate_layer scores a single one.
EvalReport layer_sweep(const EncoderModel& model, const BliDataset& dataset,
                       std::string checkpoint_id = "");
EvalReport layer_sweep(const EncoderModel& model, const XlsimDataset& dataset,
                       std::string checkpoint_id = "");
EvalReport layer_sweep(const EncoderModel& model, const RetrievalDataset& dataset,
                       std::string checkpoint_id = "");
EvalReport evaluate_layer(const EncoderModel& model, std::size_t layer, const BliDataset& dataset,
                          std::string checkpoint_id = "");
EvalReport evaluate_layer(const EncoderModel& model, std::size_t layer, const XlsimDataset& dataset,
                          std::string checkpoint_id = "");
EvalReport evaluate_layer(const EncoderModel& model, std::size_t layer,
                          const RetrievalDataset& dataset, std::string checkpoint_id = "");

}  // namespace lexspec
