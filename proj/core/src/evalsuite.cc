#include "lexspec/evalsuite.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "lexspec/error.h"

namespace lexspec {

namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> read_tsv(const fs::path& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      cols.push_back(line.substr(start, tab - start));
    }
    cols.push_back(line.substr(start));
    if (cols.size() != columns) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(columns) + " tab-separated columns, found " +
                            std::to_string(cols.size()));
    }
    rows.push_back(std::move(cols));
  }
  return rows;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> row_norms(const EmbeddingMatrix& m) {
  std::vector<double> norms(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    norms[i] = std::sqrt(dot(m.row(i), m.row(i)));
    if (!(norms[i] > 0.0)) throw ValidationError("evaluation: zero-norm embedding at row " + std::to_string(i));
  }
  return norms;
}

// Cosine as dot / (|a| |b|), so that equal (dot, norm) triples give bitwise
// equal scores and ties break by candidate order.
double cosine_at(const EmbeddingMatrix& a, std::size_t i, double na, const EmbeddingMatrix& b, std::size_t j,
                 double nb) {
  return dot(a.row(i), b.row(j)) / (na * nb);
}

void check_dims(const EmbeddingMatrix& q, const EmbeddingMatrix& c) {
  if (q.dim != c.dim) throw ValidationError("evaluation: query and candidate dimensions differ");
  if (q.rows == 0) throw ValidationError("evaluation: no queries");
  if (c.rows == 0) throw ValidationError("evaluation: no candidates");
}

}  // namespace

// ---------------------------------------------------------------------------
// Datasets

void BliDataset::validate() const {
  if (queries.empty()) throw ValidationError("BLI dataset '" + id + "' is empty");
  if (target_vocabulary.empty()) throw ValidationError("BLI dataset '" + id + "': empty target vocabulary");
  std::unordered_set<std::string> vocab(target_vocabulary.begin(), target_vocabulary.end());
  for (const auto& q : queries) {
    if (q.golds.empty()) throw ValidationError("BLI dataset '" + id + "': query without gold");
    for (const auto& g : q.golds) {
      if (!vocab.contains(g)) {
        throw ValidationError("BLI dataset '" + id + "': gold target '" + g + "' for '" +
                              q.source + "' is not in the target vocabulary");
      }
    }
  }
}

BliDataset make_bli_dataset(std::string id,
                            const std::vector<std::pair<std::string, std::string>>& pairs,
                            std::vector<std::string> target_vocabulary) {
  BliDataset ds;
  ds.id = std::move(id);
  ds.target_vocabulary = std::move(target_vocabulary);
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& [src, tgt] : pairs) {
    auto [it, inserted] = slot.try_emplace(src, ds.queries.size());
    if (inserted) ds.queries.push_back({src, {}});
    auto& golds = ds.queries[it->second].golds;
    if (std::find(golds.begin(), golds.end(), tgt) == golds.end()) golds.push_back(tgt);
  }
  return ds;
}

BliDataset load_bli_dataset(const fs::path& test_file, const fs::path& vocab_file) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (auto& row : read_tsv(test_file, 2)) pairs.emplace_back(row[0], row[1]);
  std::vector<std::string> vocab;
  {
    std::ifstream in(vocab_file);
    if (!in) throw IoError("cannot open " + vocab_file.string());
    std::string line;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && seen.insert(line).second) vocab.push_back(line);
    }
  }
  BliDataset ds = make_bli_dataset(test_file.stem().string(), pairs, std::move(vocab));
  ds.validate();
  return ds;
}

void XlsimDataset::validate() const {
  if (entries.size() < 2) throw ValidationError("XLSIM dataset '" + id + "' needs at least 2 entries");
  for (const auto& e : entries) {
    if (!std::isfinite(e.score)) throw ValidationError("XLSIM dataset '" + id + "': non-finite score");
  }
}

XlsimDataset load_xlsim_dataset(const fs::path& path) {
  XlsimDataset ds;
  ds.id = path.stem().string();
  for (auto& row : read_tsv(path, 3)) {
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(row[2], &used);
      if (used != row[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError(path.string() + ": bad similarity score '" + row[2] + "'");
    }
    ds.entries.push_back({row[0], row[1], score});
  }
  ds.validate();
  return ds;
}

void RetrievalDataset::validate() const {
  if (pairs.empty()) throw ValidationError("retrieval dataset '" + id + "' is empty");
}

RetrievalDataset load_retrieval_dataset(const fs::path& path) {
  RetrievalDataset ds;
  ds.id = path.stem().string();
  for (auto& row : read_tsv(path, 2)) ds.pairs.emplace_back(row[0], row[1]);
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// Metrics

std::vector<std::size_t> best_gold_ranks(const EmbeddingMatrix& queries,
                                         const EmbeddingMatrix& candidates,
                                         const std::vector<std::vector<std::size_t>>& golds) {
  check_dims(queries, candidates);
  if (golds.size() != queries.rows) throw ValidationError("evaluation: one gold list per query required");
  const EmbeddingMatrix& q = queries;
  const EmbeddingMatrix& c = candidates;
  const auto qn = row_norms(q), cn = row_norms(c);
  std::vector<std::size_t> ranks(q.rows);
  std::vector<double> scores(c.rows);
  for (std::size_t i = 0; i < q.rows; ++i) {
    if (golds[i].empty()) throw ValidationError("evaluation: query without gold");
    for (std::size_t j = 0; j < c.rows; ++j) scores[j] = cosine_at(q, i, qn[i], c, j, cn[j]);
    std::size_t best = c.rows + 1;
    for (std::size_t g : golds[i]) {
      if (g >= c.rows) throw ValidationError("evaluation: gold index out of range");
      std::size_t rank = 1;
      for (std::size_t j = 0; j < c.rows; ++j) {
        if (scores[j] > scores[g] || (scores[j] == scores[g] && j < g)) ++rank;
      }
      best = std::min(best, rank);
    }
    ranks[i] = best;
  }
  return ranks;
}

double mean_reciprocal_rank(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates,
                            const std::vector<std::vector<std::size_t>>& golds) {
  const auto ranks = best_gold_ranks(queries, candidates, golds);
  double sum = 0.0;
  for (std::size_t r : ranks) sum += 1.0 / static_cast<double>(r);
  return sum / static_cast<double>(ranks.size());
}

double retrieval_accuracy(const EmbeddingMatrix& queries, const EmbeddingMatrix& candidates) {
  check_dims(queries, candidates);
  if (queries.rows != candidates.rows) {
    throw ValidationError("retrieval: queries and candidates must pair 1:1");
  }
  const EmbeddingMatrix& q = queries;
  const EmbeddingMatrix& c = candidates;
  const auto qn = row_norms(q), cn = row_norms(c);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < q.rows; ++i) {
    std::size_t arg = 0;
    double best = cosine_at(q, i, qn[i], c, 0, cn[0]);
    for (std::size_t j = 1; j < c.rows; ++j) {
      const double s = cosine_at(q, i, qn[i], c, j, cn[j]);
      if (s > best) {
        best = s;
        arg = j;
      }
    }
    if (arg == i) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(q.rows);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Model-based evaluation

namespace {

template <typename FrameFn>
std::vector<EmbeddingMatrix> embed_all(const EncoderModel& model,
                                       const std::vector<std::string>& items, FrameFn frame) {
  const std::size_t layers = model.num_layers() + 1;
  const std::size_t d = model.config().dim;
  std::vector<EmbeddingMatrix> out(layers);
  for (auto& m : out) {
    m.rows = items.size();
    m.dim = d;
    m.data.resize(items.size() * d);
  }
  Tape tape;
  NoGradGuard guard(tape);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const WordEncoding enc = model.encode(tape, frame(items[i]));
    for (std::size_t l = 0; l < layers; ++l) {
      const auto v = enc.layers[l].values();
      std::copy(v.begin(), v.end(), out[l].row(i).begin());
    }
  }
  return out;
}

void check_layer(const EncoderModel& model, std::size_t layer) {
  if (layer > model.num_layers()) {
    throw ValidationError("evaluation: layer " + std::to_string(layer) + " out of range (model has layers 0.." +
                          std::to_string(model.num_layers()) + ")");
  }
}

std::vector<std::optional<double>> bli_scores(const EncoderModel& model, const BliDataset& ds) {
  ds.validate();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ds.target_vocabulary.size(); ++i) index.emplace(ds.target_vocabulary[i], i);
  std::vector<std::string> sources;
  std::vector<std::vector<std::size_t>> golds;
  for (const auto& q : ds.queries) {
    sources.push_back(q.source);
    auto& g = golds.emplace_back();
    for (const auto& t : q.golds) g.push_back(index.at(t));
  }
  const auto qe = embed_words(model, sources);
  const auto ce = embed_words(model, ds.target_vocabulary);
  std::vector<std::optional<double>> out;
  for (std::size_t l = 0; l < qe.size(); ++l) out.push_back(mean_reciprocal_rank(qe[l], ce[l], golds));
  return out;
}

std::vector<std::optional<double>> xlsim_scores(const EncoderModel& model, const XlsimDataset& ds) {
  ds.validate();
  std::vector<std::string> left, right;
  std::vector<double> human;
  for (const auto& e : ds.entries) {
    left.push_back(e.w1);
    right.push_back(e.w2);
    human.push_back(e.score);
  }
  const auto le = embed_words(model, left);
  const auto re = embed_words(model, right);
  std::vector<std::optional<double>> out;
  for (std::size_t l = 0; l < le.size(); ++l) {
    const EmbeddingMatrix& a = le[l];
    const EmbeddingMatrix& b = re[l];
    const auto an = row_norms(a), bn = row_norms(b);
    std::vector<double> cosines(a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) cosines[i] = cosine_at(a, i, an[i], b, i, bn[i]);
    out.push_back(spearman(cosines, human));
  }
  return out;
}

std::vector<std::optional<double>> retrieval_scores(const EncoderModel& model,
                                                    const RetrievalDataset& ds) {
  ds.validate();
  std::vector<std::string> foreign, english;
  for (const auto& [f, e] : ds.pairs) {
    foreign.push_back(f);
    english.push_back(e);
  }
  const auto fe = embed_sentences(model, foreign);
  const auto ee = embed_sentences(model, english);
  std::vector<std::optional<double>> out;
  for (std::size_t l = 0; l < fe.size(); ++l) out.push_back(retrieval_accuracy(fe[l], ee[l]));
  return out;
}

}  // namespace

std::vector<EmbeddingMatrix> embed_words(const EncoderModel& model,
                                         const std::vector<std::string>& words) {
  return embed_all(model, words, [&](const std::string& w) { return model.frame_type(w); });
}

std::vector<EmbeddingMatrix> embed_sentences(const EncoderModel& model,
                                             const std::vector<std::string>& sentences) {
  return embed_all(model, sentences, [&](const std::string& s) { return model.frame_sentence(s); });
}

double bli_mrr(const EncoderModel& model, std::size_t layer, const BliDataset& dataset) {
  check_layer(model, layer);
  return *bli_scores(model, dataset)[layer];
}

std::optional<double> xlsim_spearman(const EncoderModel& model, std::size_t layer,
                                     const XlsimDataset& dataset) {
  check_layer(model, layer);
  return xlsim_scores(model, dataset)[layer];
}

double sentence_retrieval_accuracy(const EncoderModel& model, std::size_t layer,
                                   const RetrievalDataset& dataset) {
  check_layer(model, layer);
  return *retrieval_scores(model, dataset)[layer];
}

std::string_view to_string(EvalTask task) {
  switch (task) {
    case EvalTask::kBli: return "bli";
    case EvalTask::kXlsim: return "xlsim";
    case EvalTask::kRetrieval: return "retrieval";
  }
  return "unknown";
}

EvalReport make_report(EvalTask task, std::string dataset_id, std::string checkpoint_id,
                       std::vector<std::size_t> layers,
                       std::vector<std::optional<double>> per_layer) {
  if (layers.size() != per_layer.size() || layers.empty()) {
    throw ValidationError("evaluation report: one score per evaluated layer required");
  }
  EvalReport r;
  r.task = task;
  r.dataset_id = std::move(dataset_id);
  r.checkpoint_id = std::move(checkpoint_id);
  r.layers = std::move(layers);
  r.per_layer = std::move(per_layer);
  r.best_layer = r.layers.front();
  for (std::size_t i = 0; i < r.per_layer.size(); ++i) {
    const auto& s = r.per_layer[i];
    if (s && (!r.best_score || *s > *r.best_score || (*s == *r.best_score && r.layers[i] < r.best_layer))) {
      r.best_score = s;
      r.best_layer = r.layers[i];
    }
  }
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& s : per_layer) scores.push_back(s ? nlohmann::json(*s) : nlohmann::json(nullptr));
  return {{"task", std::string(to_string(task))},
          {"layers", layers},
          {"dataset_id", dataset_id},
          {"checkpoint_id", checkpoint_id},
          {"per_layer", scores},
          {"best_layer", best_layer},
          {"best_score", best_score ? nlohmann::json(*best_score) : nlohmann::json(nullptr)}};
}

namespace {

std::vector<std::size_t> all_layers(const EncoderModel& model) {
  std::vector<std::size_t> out(model.num_layers() + 1);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

EvalReport single(EvalTask task, const EncoderModel& model, std::size_t layer, std::string id,
                  std::string checkpoint_id, std::vector<std::optional<double>> scores) {
  check_layer(model, layer);
  return make_report(task, std::move(id), std::move(checkpoint_id), {layer}, {scores[layer]});
}

}  // namespace

EvalReport layer_sweep(const EncoderModel& model, const BliDataset& dataset, std::string checkpoint_id) {
  return make_report(EvalTask::kBli, dataset.id, std::move(checkpoint_id), all_layers(model),
                     bli_scores(model, dataset));
}

EvalReport layer_sweep(const EncoderModel& model, const XlsimDataset& dataset, std::string checkpoint_id) {
  return make_report(EvalTask::kXlsim, dataset.id, std::move(checkpoint_id), all_layers(model),
                     xlsim_scores(model, dataset));
}

EvalReport layer_sweep(const EncoderModel& model, const RetrievalDataset& dataset,
                       std::string checkpoint_id) {
  return make_report(EvalTask::kRetrieval, dataset.id, std::move(checkpoint_id), all_layers(model),
                     retrieval_scores(model, dataset));
}

EvalReport evaluate_layer(const EncoderModel& model, std::size_t layer, const BliDataset& dataset,
                          std::string checkpoint_id) {
  check_layer(model, layer);
  return single(EvalTask::kBli, model, layer, dataset.id, std::move(checkpoint_id), bli_scores(model, dataset));
}

EvalReport evaluate_layer(const EncoderModel& model, std::size_t layer, const XlsimDataset& dataset,
                          std::string checkpoint_id) {
  check_layer(model, layer);
  return single(EvalTask::kXlsim, model, layer, dataset.id, std::move(checkpoint_id),
                xlsim_scores(model, dataset));
}

EvalReport evaluate_layer(const EncoderModel& model, std::size_t layer, const RetrievalDataset& dataset,
                          std::string checkpoint_id) {
  check_layer(model, layer);
  return single(EvalTask::kRetrieval, model, layer, dataset.id, std::move(checkpoint_id),
                retrieval_scores(model, dataset));
}

}  // namespace lexspec
