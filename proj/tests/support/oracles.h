#pragma once

// Reference implementations used as test oracles. They share no code with the
// library and favour the most direct formulation over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

inline Matrix similarity_matrix(const Matrix& queries, const Matrix& candidates) {
  Matrix s(queries.size(), std::vector<double>(candidates.size()));
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < candidates.size(); ++j) s[i][j] = cosine(queries[i], candidates[j]);
  }
  return s;
}

// Candidate indices sorted by descending similarity, ties by index.
inline std::vector<std::size_t> argsort_desc(const std::vector<double>& row) {
  std::vector<std::size_t> idx(row.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  return idx;
}

inline double mrr(const Matrix& queries, const Matrix& candidates,
                  const std::vector<std::vector<std::size_t>>& golds) {
  const Matrix s = similarity_matrix(queries, candidates);
  double total = 0.0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto order = argsort_desc(s[i]);
    std::size_t best = order.size() + 1;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (std::find(golds[i].begin(), golds[i].end(), order[pos]) != golds[i].end()) {
        best = pos + 1;
        break;
      }
    }
    total += 1.0 / static_cast<double>(best);
  }
  return total / static_cast<double>(queries.size());
}

inline double retrieval_accuracy(const Matrix& queries, const Matrix& candidates) {
  const Matrix s = similarity_matrix(queries, candidates);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (argsort_desc(s[i]).front() == i) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

// rank_i = #{j : x_j < x_i} + (#{j : x_j == x_i} + 1) / 2
inline std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0.0, equal = 0.0;
    for (double v : x) {
      if (v < x[i]) less += 1.0;
      if (v == x[i]) equal += 1.0;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

inline std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

// Base-2 entropy of the value histogram.
inline double entropy_bits(const std::vector<double>& values) {
  std::map<double, double> hist;
  for (double v : values) hist[v] += 1.0;
  double h = 0.0;
  for (const auto& [v, c] : hist) {
    const double p = c / static_cast<double>(values.size());
    h += -p * std::log(p) / std::log(2.0);
  }
  return h;
}

}  // namespace oracle
