#pragma once

// Typological diversity, train-test language similarity and
// distribution-preserving constraint subsetting.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lexspec/lexdata.h"
#include "lexspec/sampler.h"

namespace lexspec {

class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  // Every vector must have the same length and finite values.
  explicit FeatureMatrix(std::map<std::string, std::vector<double>> rows);

  std::size_t num_features() const { return num_features_; }
  const std::map<std::string, std::vector<double>>& rows() const { return rows_; }
  bool contains(const std::string& lang) const { return rows_.contains(lang); }
  // Throws ValidationError naming the language when absent.
  const std::vector<double>& at(const std::string& lang) const;

 private:
  std::map<std::string, std::vector<double>> rows_;
  std::size_t num_features_ = 0;
};

// CSV with header "lang,f1,...,fK" and one row per language.
FeatureMatrix load_feature_matrix(const std::filesystem::path& path);

// Mean over features of the base-2 Shannon entropy of the sample's values,
// grouping values by exact equality.
double typological_diversity(const std::set<std::string>& sample, const FeatureMatrix& features);

// Mean cosine similarity over all (train, test) language pairs.
double train_test_similarity(const std::set<std::string>& train,
                             const std::set<std::string>& test, const FeatureMatrix& features);

// Largest-remainder apportionment of `target` over `counts`. Remainder ties go
// to the larger count, then to the smaller key.
std::map<LanguagePairKey, std::size_t> apportion_quotas(const PairCounts& counts,
                                                        std::size_t target);

// Exactly `target` constraints with the language-pair distribution of the
// input preserved by apportion_quotas. Each pair's quota is sampled without
// replacement; the output keeps input order.
std::vector<ConstraintPair> subset_constraints(const std::vector<ConstraintPair>& constraints,
                                               std::size_t target, std::uint64_t seed);

// Every monolingual and cross-lingual key over `languages`, each with
// `per_pair_budget` constraints: n(n+1)/2 keys.
std::map<LanguagePairKey, std::size_t> fixed_budget_mining_plan(
    const std::set<std::string>& languages, std::size_t per_pair_budget);

// Up to `quota` constraints per planned key, sampled as in subset_constraints.
// Keys absent from the plan are dropped.
std::vector<ConstraintPair> apply_quota_plan(const std::vector<ConstraintPair>& constraints,
                                             const std::map<LanguagePairKey, std::size_t>& plan,
                                             std::uint64_t seed);

}  // namespace lexspec
