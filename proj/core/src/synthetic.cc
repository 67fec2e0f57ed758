#include "lexspec/synthetic.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "lexspec/error.h"
#include "lexspec/report.h"
#include "lexspec/rng.h"

namespace lexspec {

namespace fs = std::filesystem;

namespace {

using Matrix = std::vector<std::vector<double>>;

std::vector<double> unit_vector(std::size_t d, Rng& rng) {
  std::vector<double> v(d);
  double sq = 0.0;
  for (double& x : v) {
    x = rng.normal();
    sq += x * x;
  }
  const double n = std::sqrt(sq);
  for (double& x : v) x /= n;
  return v;
}

// Random orthogonal matrix: Gram-Schmidt on Gaussian columns.
Matrix random_rotation(std::size_t d, Rng& rng) {
  Matrix cols;
  while (cols.size() < d) {
    std::vector<double> v(d);
    for (double& x : v) x = rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& c : cols) {
        double proj = 0.0;
        for (std::size_t i = 0; i < d; ++i) proj += v[i] * c[i];
        for (std::size_t i = 0; i < d; ++i) v[i] -= proj * c[i];
      }
    }
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq < 1e-12) continue;
    const double n = std::sqrt(sq);
    for (double& x : v) x /= n;
    cols.push_back(std::move(v));
  }
  return cols;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

void write_bli(const BliDataset& ds, const fs::path& pairs, const fs::path& vocab) {
  std::vector<std::string> lines;
  for (const auto& q : ds.queries) {
    for (const auto& g : q.golds) lines.push_back(q.source + "\t" + g);
  }
  write_lines(pairs, lines);
  write_lines(vocab, ds.target_vocabulary);
}

}  // namespace

void SyntheticConfig::validate() const {
  if (concepts < 2) throw ValidationError("synthetic: need at least 2 concepts");
  if (words_per_concept < 2) throw ValidationError("synthetic: need at least 2 words per concept");
  if (dim == 0) throw ValidationError("synthetic: dim must be positive");
  if (!(noise >= 0.0 && shift >= 0.0 && std::isfinite(theta))) {
    throw ValidationError("synthetic: noise and shift must be non-negative");
  }
}

std::string synthetic_word(const std::string& lang, std::size_t concept_id, std::size_t k) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%04zuk%zu", lang.c_str(), concept_id, k);
  return buf;
}

SyntheticBenchmark make_synthetic_benchmark(const SyntheticConfig& config) {
  config.validate();
  const std::size_t d = config.dim, nc = config.concepts, w = config.words_per_concept;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  Rng rng(config.seed);

  Matrix latent(nc, std::vector<double>(d));
  for (auto& z : latent) {
    for (double& x : z) x = rng.normal() * inv_sqrt_d;
  }
  const auto u_a = unit_vector(d, rng);
  const auto u_b = unit_vector(d, rng);
  const Matrix rot = random_rotation(d, rng);  // rot[j] is column j
  const double ct = std::cos(config.theta), st = std::sin(config.theta);

  SyntheticBenchmark b;
  b.config = config;
  b.vectors.rows = 2 * nc * w;
  b.vectors.dim = d;
  b.vectors.data.reserve(b.vectors.rows * d);
  auto emit = [&](const std::string& lang, std::size_t c, std::size_t k, const std::vector<double>& base,
                  const std::vector<double>& offset) {
    b.words.push_back(synthetic_word(lang, c, k));
    for (std::size_t i = 0; i < d; ++i) {
      b.vectors.data.push_back(base[i] + config.noise * rng.normal() * inv_sqrt_d + config.shift * offset[i]);
    }
  };
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t k = 0; k < w; ++k) emit(kSyntheticLangA, c, k, latent[c], u_a);
  }
  for (std::size_t c = 0; c < nc; ++c) {
    std::vector<double> mapped(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < d; ++i) mapped[i] += st * rot[j][i] * latent[c][j];
    }
    for (std::size_t i = 0; i < d; ++i) mapped[i] += ct * latent[c][i];
    for (std::size_t k = 0; k < w; ++k) emit(kSyntheticLangB, c, k, mapped, u_b);
  }

  const std::size_t train_concepts = nc / 2;
  for (std::size_t c = 0; c < train_concepts; ++c) {
    std::vector<std::pair<std::string, std::string>> members;
    for (std::size_t k = 0; k < w; ++k) members.emplace_back(synthetic_word(kSyntheticLangA, c, k), kSyntheticLangA);
    for (std::size_t k = 0; k < w; ++k) members.emplace_back(synthetic_word(kSyntheticLangB, c, k), kSyntheticLangB);
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        ConstraintPair p;
        p.w1 = members[i].first;
        p.l1 = members[i].second;
        p.w2 = members[j].first;
        p.l2 = members[j].second;
        p.synset_id = "concept:" + std::to_string(c);
        b.constraint_pool.push_back(std::move(p));
      }
    }
  }
  for (std::size_t i = b.constraint_pool.size(); i > 1; --i) {
    std::swap(b.constraint_pool[i - 1], b.constraint_pool[rng.uniform_index(i)]);
  }
  const std::size_t take = std::min(config.train_constraints, b.constraint_pool.size());
  b.constraints.assign(b.constraint_pool.begin(), b.constraint_pool.begin() + static_cast<std::ptrdiff_t>(take));

  auto bli = [&](std::string id, const char* src, const char* tgt, std::size_t k) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t c = train_concepts; c < nc; ++c) {
      pairs.emplace_back(synthetic_word(src, c, k), synthetic_word(tgt, c, k));
    }
    std::vector<std::string> vocab;
    for (std::size_t c = 0; c < nc; ++c) vocab.push_back(synthetic_word(tgt, c, k));
    BliDataset ds = make_bli_dataset(std::move(id), pairs, std::move(vocab));
    ds.src_lang = src;
    ds.tgt_lang = tgt;
    return ds;
  };
  b.test = bli("test", kSyntheticLangA, kSyntheticLangB, 0);
  b.validation.push_back(bli("valid_0", kSyntheticLangA, kSyntheticLangB, 1));
  b.validation.push_back(bli("valid_1", kSyntheticLangB, kSyntheticLangA, 1));
  return b;
}

EncoderModel SyntheticBenchmark::make_model(EncoderConfig model_config, std::uint64_t init_seed) const {
  if (model_config.dim != config.dim) {
    throw ValidationError("synthetic: model dimension must equal benchmark dimension");
  }
  EncoderModel model = init_model(model_config, vocabulary(), init_seed);
  auto table = model.embeddings().mutable_values();
  const std::size_t d = config.dim;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto row = vectors.row(i);
    std::copy(row.begin(), row.end(), table.begin() + static_cast<std::ptrdiff_t>((SubwordVocabulary::kReserved + i) * d));
  }
  return model;
}

void write_synthetic_benchmark(const SyntheticBenchmark& bench, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  write_lines(dir / "vocab.txt", bench.words);
  {
    std::ofstream out(dir / "vectors.txt");
    if (!out) throw IoError("cannot write " + (dir / "vectors.txt").string());
    out << bench.vectors.rows << ' ' << bench.vectors.dim << '\n';
    for (std::size_t i = 0; i < bench.words.size(); ++i) {
      out << bench.words[i];
      for (double v : bench.vectors.row(i)) out << ' ' << format_double(v);
      out << '\n';
    }
  }
  write_constraints(bench.constraints, dir / "constraints.tsv");
  write_bli(bench.test, dir / "test.tsv", dir / "test_vocab.txt");
  for (std::size_t i = 0; i < bench.validation.size(); ++i) {
    const std::string stem = "valid_" + std::to_string(i);
    write_bli(bench.validation[i], dir / (stem + ".tsv"), dir / (stem + "_vocab.txt"));
  }
}

}  // namespace lexspec
