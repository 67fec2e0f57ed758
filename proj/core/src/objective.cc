#include "lexspec/objective.h"

#include "lexspec/error.h"

namespace lexspec {

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw ValidationError("loss: temperature must be positive");
}

std::vector<BatchEntry> make_batch_entries(const std::vector<std::string>& synset_ids) {
  std::vector<BatchEntry> out;
  out.reserve(2 * synset_ids.size());
  for (std::size_t i = 0; i < synset_ids.size(); ++i) {
    out.push_back({synset_ids[i], Slot::kFirst, i});
    out.push_back({synset_ids[i], Slot::kSecond, i});
  }
  return out;
}

std::vector<OrderedPair> build_positive_set(const std::vector<BatchEntry>& entries,
                                            PositiveSet mode) {
  std::vector<OrderedPair> out;
  for (std::size_t u = 0; u < entries.size(); ++u) {
    for (std::size_t v = 0; v < entries.size(); ++v) {
      if (u == v || entries[u].synset_id != entries[v].synset_id) continue;
      if (mode == PositiveSet::kCrossSlot && entries[u].slot == entries[v].slot) continue;
      out.emplace_back(u, v);
    }
  }
  return out;
}

Tensor info_nce_loss(Tape& tape, const BatchEmbeddings& batch, const LossConfig& config) {
  config.validate();
  const std::size_t n = batch.entries.size();
  if (batch.embeddings.rows() != n) {
    throw ValidationError("loss: " + std::to_string(batch.embeddings.rows()) +
                          " embedding rows for " + std::to_string(n) + " batch entries");
  }
  const auto positives = build_positive_set(batch.entries, config.positives);
  if (positives.empty()) throw ValidationError("loss: positive set is empty");

  // Constant masks: negatives per anchor, and one-hot positive selectors.
  std::vector<double> negative_mask(n * n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t m = 0; m < n; ++m) {
      if (batch.entries[u].synset_id != batch.entries[m].synset_id) negative_mask[u * n + m] = 1.0;
    }
  }
  const std::size_t np = positives.size();
  std::vector<double> positive_select(np * n, 0.0);
  std::vector<std::size_t> anchors(np);
  for (std::size_t k = 0; k < np; ++k) {
    anchors[k] = positives[k].first;
    positive_select[k * n + positives[k].second] = 1.0;
  }
  const Tensor neg_mask = Tensor::from({n, n}, std::move(negative_mask));
  const Tensor pos_select = Tensor::from({np, n}, std::move(positive_select));
  const Tensor ones = Tensor::filled({n, 1}, 1.0);

  const Tensor unit = tape.l2_normalize_rows(batch.embeddings);
  const Tensor sim = tape.exp(tape.scale(tape.matmul(unit, tape.transpose(unit)), 1.0 / config.tau));
  const Tensor negative_sum = tape.matmul(tape.mul(sim, neg_mask), ones);        // n x 1
  const Tensor anchor_rows = tape.gather_rows(sim, anchors);                      // np x n
  const Tensor positive = tape.matmul(tape.mul(anchor_rows, pos_select), ones);   // np x 1
  const Tensor denominator = tape.add(positive, tape.gather_rows(negative_sum, anchors));
  return tape.mean(tape.sub(tape.log(denominator), tape.log(positive)), 0);
}

}  // namespace lexspec
