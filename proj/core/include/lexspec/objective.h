#pragma once

// InfoNCE over a batch of synonym pairs with synset-aware in-batch negatives.
//
// For an anchor u and positive v (distinct instances sharing a synset):
//   term(u, v) = -log( s(u,v) / (s(u,v) + sum_{n in N(u)} s(u,n)) )
//   s(x, y)    = exp(cos(x, y) / tau)
// N(u) holds every instance whose synset differs from u's. The loss is the
// mean of term(u, v) over the ordered positive set P.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lexspec/autodiff.h"

namespace lexspec {

enum class Slot { kFirst, kSecond };

struct BatchEntry {
  std::string synset_id;
  Slot slot = Slot::kFirst;
  std::size_t pair_index = 0;
};

// Row i of `embeddings` (2*N_B x d) belongs to entries[i]. Pair i occupies rows
// 2i (first slot) and 2i+1 (second slot).
struct BatchEmbeddings {
  Tensor embeddings;
  std::vector<BatchEntry> entries;
};

enum class PositiveSet {
  // Every ordered pair of distinct instances with equal synset ids.
  kAllInstances,
  // Only pairs whose members sit in different slots.
  kCrossSlot,
};

struct LossConfig {
  double tau = 0.07;
  PositiveSet positives = PositiveSet::kAllInstances;

  void validate() const;
};

using OrderedPair = std::pair<std::size_t, std::size_t>;

// Entries for a batch of `synset_ids.size()` pairs, laid out as described above.
std::vector<BatchEntry> make_batch_entries(const std::vector<std::string>& synset_ids);

std::vector<OrderedPair> build_positive_set(const std::vector<BatchEntry>& entries,
                                            PositiveSet mode = PositiveSet::kAllInstances);

// Scalar loss on `tape`. Fails on an empty positive set or zero-norm rows.
Tensor info_nce_loss(Tape& tape, const BatchEmbeddings& batch, const LossConfig& config);

}  // namespace lexspec
