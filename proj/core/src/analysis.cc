#include "lexspec/analysis.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "lexspec/error.h"
#include "lexspec/rng.h"

namespace lexspec {

FeatureMatrix::FeatureMatrix(std::map<std::string, std::vector<double>> rows) : rows_(std::move(rows)) {
  bool first = true;
  for (const auto& [lang, vec] : rows_) {
    if (first) {
      num_features_ = vec.size();
      first = false;
    } else if (vec.size() != num_features_) {
      throw ValidationError("feature vector for '" + lang + "' has " + std::to_string(vec.size()) +
                            " values, expected " + std::to_string(num_features_));
    }
    for (double v : vec) {
      if (!std::isfinite(v)) throw ValidationError("non-finite feature value for '" + lang + "'");
    }
  }
}

const std::vector<double>& FeatureMatrix::at(const std::string& lang) const {
  auto it = rows_.find(lang);
  if (it == rows_.end()) throw ValidationError("language '" + lang + "' missing from feature matrix");
  return it->second;
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.empty() || header[0] != "lang") {
    throw ValidationError(path.string() + ": header must start with 'lang'");
  }
  std::map<std::string, std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (cells.size() != header.size()) {
      throw ValidationError(where + ": expected " + std::to_string(header.size()) + " cells");
    }
    std::vector<double> vec;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      try {
        std::size_t used = 0;
        vec.push_back(std::stod(cells[i], &used));
        if (used != cells[i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ValidationError(where + ": bad feature value '" + cells[i] + "'");
      }
    }
    if (!rows.emplace(cells[0], std::move(vec)).second) {
      throw ValidationError(where + ": duplicate language '" + cells[0] + "'");
    }
  }
  return FeatureMatrix(std::move(rows));
}

double typological_diversity(const std::set<std::string>& sample, const FeatureMatrix& features) {
  if (sample.empty()) throw ValidationError("diversity: empty language sample");
  std::vector<const std::vector<double>*> vecs;
  for (const auto& lang : sample) vecs.push_back(&features.at(lang));
  const std::size_t k = features.num_features();
  if (k == 0) return 0.0;
  const double n = static_cast<double>(vecs.size());
  double total = 0.0;
  std::vector<double> column(vecs.size());
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t i = 0; i < vecs.size(); ++i) column[i] = (*vecs[i])[f];
    std::sort(column.begin(), column.end());
    double h = 0.0;
    for (std::size_t i = 0; i < column.size();) {
      std::size_t j = i;
      while (j < column.size() && column[j] == column[i]) ++j;
      const double p = static_cast<double>(j - i) / n;
      if (p < 1.0) h -= p * std::log2(p);
      i = j;
    }
    total += h;
  }
  return total / static_cast<double>(k);
}

double train_test_similarity(const std::set<std::string>& train, const std::set<std::string>& test,
                             const FeatureMatrix& features) {
  if (train.empty() || test.empty()) throw ValidationError("similarity: empty language set");
  auto norm = [](const std::vector<double>& v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  };
  double sum = 0.0;
  for (const auto& a : train) {
    const auto& va = features.at(a);
    const double na = norm(va);
    if (!(na > 0.0)) throw ValidationError("similarity: zero feature vector for '" + a + "'");
    for (const auto& b : test) {
      const auto& vb = features.at(b);
      const double nb = norm(vb);
      if (!(nb > 0.0)) throw ValidationError("similarity: zero feature vector for '" + b + "'");
      sum += std::inner_product(va.begin(), va.end(), vb.begin(), 0.0) / (na * nb);
    }
  }
  return sum / static_cast<double>(train.size() * test.size());
}

std::map<LanguagePairKey, std::size_t> apportion_quotas(const PairCounts& counts, std::size_t target) {
  std::size_t total = 0;
  for (const auto& [key, n] : counts) total += n;
  if (total == 0) throw ValidationError("apportionment: no constraints");
  if (target == 0 || target > total) {
    throw ValidationError("target size " + std::to_string(target) + " outside 1.." + std::to_string(total));
  }
  struct Share {
    LanguagePairKey key;
    std::size_t count;
    // Remainder numerator over `total`, kept exact.
    std::size_t remainder;
  };
  std::map<LanguagePairKey, std::size_t> quotas;
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (const auto& [key, n] : counts) {
    if (n != 0 && target > std::numeric_limits<std::size_t>::max() / n) {
      throw ValidationError("apportionment: counts too large");
    }
    const std::size_t prod = n * target;
    const std::size_t floor = prod / total;
    quotas[key] = floor;
    assigned += floor;
    shares.push_back({key, n, prod % total});
  }
  std::sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    if (a.count != b.count) return a.count > b.count;
    return a.key < b.key;
  });
  for (std::size_t i = 0; assigned < target; ++i, ++assigned) ++quotas[shares[i].key];
  return quotas;
}

std::vector<ConstraintPair> apply_quota_plan(const std::vector<ConstraintPair>& constraints,
                                             const std::map<LanguagePairKey, std::size_t>& plan,
                                             std::uint64_t seed) {
  std::map<LanguagePairKey, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    members[LanguagePairKey::of(constraints[i])].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (const auto& [key, quota] : plan) {
    auto it = members.find(key);
    if (it == members.end()) continue;
    auto& pool = it->second;
    const std::size_t take = std::min(quota, pool.size());
    // Partial Fisher-Yates: the first `take` slots become the sample.
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    keep.insert(keep.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(keep.begin(), keep.end());
  std::vector<ConstraintPair> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) out.push_back(constraints[i]);
  return out;
}

std::vector<ConstraintPair> subset_constraints(const std::vector<ConstraintPair>& constraints,
                                               std::size_t target, std::uint64_t seed) {
  if (target == 0 || target > constraints.size()) {
    throw ValidationError("target size " + std::to_string(target) + " outside 1.." +
                          std::to_string(constraints.size()));
  }
  return apply_quota_plan(constraints, apportion_quotas(count_by_language_pair(constraints), target), seed);
}

std::map<LanguagePairKey, std::size_t> fixed_budget_mining_plan(const std::set<std::string>& languages,
                                                                std::size_t per_pair_budget) {
  if (per_pair_budget == 0) throw ValidationError("per-pair budget must be positive");
  std::map<LanguagePairKey, std::size_t> plan;
  for (auto a = languages.begin(); a != languages.end(); ++a) {
    for (auto b = a; b != languages.end(); ++b) plan[LanguagePairKey::of(*a, *b)] = per_pair_budget;
  }
  return plan;
}

}  // namespace lexspec
