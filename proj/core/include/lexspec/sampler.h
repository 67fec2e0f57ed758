#pragma once

// Smoothed multinomial sampling over language pairs and batch assembly.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexspec/lexdata.h"
#include "lexspec/rng.h"

namespace lexspec {

// Unordered language pair, stored with lo <= hi.
struct LanguagePairKey {
  std::string lo;
  std::string hi;

  static LanguagePairKey of(const std::string& a, const std::string& b);
  static LanguagePairKey of(const ConstraintPair& p) { return of(p.l1, p.l2); }
  bool monolingual() const { return lo == hi; }
  std::string str() const { return lo + "-" + hi; }

  friend auto operator<=>(const LanguagePairKey&, const LanguagePairKey&) = default;
};

using PairCounts = std::map<LanguagePairKey, std::size_t>;
using PairDistribution = std::map<LanguagePairKey, double>;

PairCounts count_by_language_pair(const std::vector<ConstraintPair>& pairs);

class ConstraintIndex {
 public:
  ConstraintIndex() = default;
  explicit ConstraintIndex(const std::vector<ConstraintPair>& pairs);

  const std::map<LanguagePairKey, std::vector<ConstraintPair>>& pools() const { return pools_; }
  const std::vector<ConstraintPair>& pool(const LanguagePairKey& key) const;
  PairCounts counts() const;
  std::size_t total() const { return total_; }
  bool empty() const { return total_ == 0; }

 private:
  std::map<LanguagePairKey, std::vector<ConstraintPair>> pools_;
  std::size_t total_ = 0;
};

struct SamplerConfig {
  double alpha = 0.5;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

using Batch = std::vector<ConstraintPair>;

// q = p^alpha / sum p^alpha with p = n / sum n. Requires 0 < alpha <= 1 and at
// least one positive count.
PairDistribution compute_distribution(const PairCounts& counts, double alpha);

// Inverse-CDF draw over the keys in map order, using one uniform() draw.
LanguagePairKey draw_language_pair(const PairDistribution& q, Rng& rng);

// Fills batch_size slots. Each slot draws a language pair from q, then a
// constraint uniformly among that pair's constraints not yet in the batch;
// exhausted pairs are redrawn. Fails when the index holds fewer constraints
// than batch_size.
Batch sample_batch(const ConstraintIndex& index, const PairDistribution& q,
                   const SamplerConfig& config, Rng& rng);

// ceil(total / batch_size).
std::size_t epoch_plan(std::size_t total_constraints, std::size_t batch_size);

// {"en-fr": {"n": .., "p": .., "q": ..}, ...}
nlohmann::json distribution_report(const PairCounts& counts, double alpha);

}  // namespace lexspec
