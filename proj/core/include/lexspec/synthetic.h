#pragma once

// Two-language toy lexicon built from shared latent concepts, used to test
// that specialization helps bilingual lexicon induction.
//
// Concept c has a latent vector z_c ~ N(0, I/d). Word k of concept c is
//   language xa:  z_c     + noise * n / sqrt(d) + shift * u_a
//   language xb:  M z_c   + noise * n / sqrt(d) + shift * u_b
// with n ~ N(0, I), unit language offsets u_a, u_b, and
// M = cos(theta) I + sin(theta) R for a random rotation R. The offsets and the
// distortion M keep the vanilla cross-lingual neighbours poor.
//
// Training constraints are sampled from all synonym pairs among the words of
// the first half of the concepts. The test set maps word 0 of every held-out
// concept from xa to xb, ranking word 0 of every concept. Two validation sets
// (xa->xb and xb->xa) use word 1 of the held-out concepts.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lexspec/encoder.h"
#include "lexspec/evalsuite.h"
#include "lexspec/lexdata.h"

namespace lexspec {

struct SyntheticConfig {
  std::size_t concepts = 100;
  std::size_t words_per_concept = 2;
  std::size_t dim = 48;
  std::size_t train_constraints = 150;
  double noise = 0.5;
  double shift = 2.0;
  double theta = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticBenchmark {
  SyntheticConfig config;
  // Word list in vocabulary order; vectors.row(i) belongs to words[i].
  std::vector<std::string> words;
  EmbeddingMatrix vectors;
  // Every candidate training pair in shuffled order.
  std::vector<ConstraintPair> constraint_pool;
  // The first config.train_constraints entries of the pool.
  std::vector<ConstraintPair> constraints;
  BliDataset test;
  std::vector<BliDataset> validation;

  SubwordVocabulary vocabulary() const { return SubwordVocabulary(words); }
  // init_model(...) with every word row replaced by its synthetic vector.
  EncoderModel make_model(EncoderConfig config, std::uint64_t init_seed) const;
};

inline constexpr const char* kSyntheticLangA = "xa";
inline constexpr const char* kSyntheticLangB = "xb";

// Word k of concept c in language `lang`, e.g. "xa0042k1".
std::string synthetic_word(const std::string& lang, std::size_t concept_id, std::size_t k);

SyntheticBenchmark make_synthetic_benchmark(const SyntheticConfig& config);

// Writes vocab.txt, vectors.txt, constraints.tsv, test.tsv, test_vocab.txt and
// valid_<i>.tsv / valid_<i>_vocab.txt into `dir`.
void write_synthetic_benchmark(const SyntheticBenchmark& bench, const std::filesystem::path& dir);

}  // namespace lexspec
