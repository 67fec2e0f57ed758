#include "lexspec/sampler.h"

#include <cmath>

#include "lexspec/error.h"

namespace lexspec {

LanguagePairKey LanguagePairKey::of(const std::string& a, const std::string& b) {
  return a <= b ? LanguagePairKey{a, b} : LanguagePairKey{b, a};
}

PairCounts count_by_language_pair(const std::vector<ConstraintPair>& pairs) {
  PairCounts counts;
  for (const auto& p : pairs) ++counts[LanguagePairKey::of(p)];
  return counts;
}

ConstraintIndex::ConstraintIndex(const std::vector<ConstraintPair>& pairs) {
  for (const auto& p : pairs) pools_[LanguagePairKey::of(p)].push_back(p);
  total_ = pairs.size();
}

const std::vector<ConstraintPair>& ConstraintIndex::pool(const LanguagePairKey& key) const {
  auto it = pools_.find(key);
  if (it == pools_.end()) throw ValidationError("no constraints for language pair " + key.str());
  return it->second;
}

PairCounts ConstraintIndex::counts() const {
  PairCounts c;
  for (const auto& [key, pool] : pools_) c[key] = pool.size();
  return c;
}

void SamplerConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ValidationError("sampler: alpha must lie in (0, 1]");
  }
  if (batch_size < 2) throw ValidationError("sampler: batch size must be at least 2");
}

PairDistribution compute_distribution(const PairCounts& counts, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ValidationError("sampler: alpha must lie in (0, 1]");
  }
  double total = 0.0;
  for (const auto& [key, n] : counts) total += static_cast<double>(n);
  if (total <= 0.0) throw ValidationError("sampler: all language-pair counts are zero");
  PairDistribution q;
  double norm = 0.0;
  for (const auto& [key, n] : counts) {
    const double p = static_cast<double>(n) / total;
    const double w = alpha == 1.0 ? p : std::pow(p, alpha);
    q[key] = w;
    norm += w;
  }
  for (auto& [key, w] : q) w /= norm;
  return q;
}

LanguagePairKey draw_language_pair(const PairDistribution& q, Rng& rng) {
  if (q.empty()) throw ValidationError("sampler: empty distribution");
  const double u = rng.uniform();
  double cumulative = 0.0;
  const LanguagePairKey* last_positive = nullptr;
  for (const auto& [key, prob] : q) {
    if (prob <= 0.0) continue;
    last_positive = &key;
    cumulative += prob;
    if (u < cumulative) return key;
  }
  // Rounding left the cumulative sum a hair below u.
  return *last_positive;
}

Batch sample_batch(const ConstraintIndex& index, const PairDistribution& q,
                   const SamplerConfig& config, Rng& rng) {
  config.validate();
  if (index.empty()) throw ValidationError("sampler: constraint index is empty");
  if (index.total() < config.batch_size) {
    throw ValidationError("sampler: " + std::to_string(index.total()) +
                          " constraints cannot fill a batch of " +
                          std::to_string(config.batch_size) + " without repeats");
  }
  // Per-key list of indices not yet used in this batch.
  std::map<LanguagePairKey, std::vector<std::size_t>> available;
  Batch batch;
  batch.reserve(config.batch_size);
  while (batch.size() < config.batch_size) {
    const LanguagePairKey key = draw_language_pair(q, rng);
    const auto& pool = index.pool(key);
    auto [it, inserted] = available.try_emplace(key);
    if (inserted) {
      it->second.resize(pool.size());
      for (std::size_t i = 0; i < pool.size(); ++i) it->second[i] = i;
    }
    auto& free = it->second;
    if (free.empty()) continue;
    const std::size_t pick = rng.uniform_index(free.size());
    batch.push_back(pool[free[pick]]);
    free[pick] = free.back();
    free.pop_back();
  }
  return batch;
}

std::size_t epoch_plan(std::size_t total_constraints, std::size_t batch_size) {
  if (total_constraints == 0 || batch_size == 0) {
    throw ValidationError("epoch_plan: inputs must be positive");
  }
  return (total_constraints + batch_size - 1) / batch_size;
}

nlohmann::json distribution_report(const PairCounts& counts, double alpha) {
  const auto q = compute_distribution(counts, alpha);
  double total = 0.0;
  for (const auto& [key, n] : counts) total += static_cast<double>(n);
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, n] : counts) {
    out[key.str()] = {{"n", n}, {"p", static_cast<double>(n) / total}, {"q", q.at(key)}};
  }
  return out;
}

}  // namespace lexspec
