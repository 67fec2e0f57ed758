#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "lexspec/error.h"
#include "lexspec/synthetic.h"

namespace lexspec {
namespace {

TEST(Synthetic, ShapesAndNaming) {
  const auto b = make_synthetic_benchmark(SyntheticConfig{});
  EXPECT_EQ(b.words.size(), 400u);
  EXPECT_EQ(b.vectors.rows, b.words.size());
  EXPECT_EQ(b.vectors.dim, 48u);
  EXPECT_EQ(b.constraints.size(), 150u);
  EXPECT_EQ(b.test.queries.size(), 50u);
  EXPECT_EQ(b.test.target_vocabulary.size(), 100u);
  EXPECT_EQ(b.validation.size(), 2u);
  EXPECT_EQ(synthetic_word("xa", 42, 1), "xa0042k1");
}

TEST(Synthetic, TestVocabularyIsDisjointFromTraining) {
  const auto b = make_synthetic_benchmark(SyntheticConfig{});
  std::set<std::string> train;
  for (const auto& p : b.constraint_pool) {
    train.insert(p.w1);
    train.insert(p.w2);
  }
  for (const auto& q : b.test.queries) {
    EXPECT_FALSE(train.contains(q.source));
    for (const auto& g : q.golds) EXPECT_FALSE(train.contains(g));
  }
  for (const auto& v : b.validation) {
    for (const auto& q : v.queries) EXPECT_FALSE(train.contains(q.source));
  }
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticConfig c;
  c.seed = 4;
  const auto a = make_synthetic_benchmark(c), b = make_synthetic_benchmark(c);
  EXPECT_EQ(a.vectors.data, b.vectors.data);
  EXPECT_EQ(a.constraints, b.constraints);
  c.seed = 5;
  EXPECT_NE(make_synthetic_benchmark(c).vectors.data, a.vectors.data);
}

TEST(Synthetic, ModelCarriesTheVectors) {
  SyntheticConfig c;
  c.concepts = 10;
  c.dim = 8;
  c.train_constraints = 10;
  const auto b = make_synthetic_benchmark(c);
  EncoderConfig ec;
  ec.dim = 8;
  ec.num_layers = 1;
  const auto m = b.make_model(ec, 1);
  const std::size_t id = *m.vocabulary().find(b.words[3]);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(m.embeddings().at(id, k), b.vectors.row(3)[k]);
  ec.dim = 16;
  EXPECT_THROW(b.make_model(ec, 1), ValidationError);
}

TEST(Synthetic, ConfigErrors) {
  SyntheticConfig c;
  c.concepts = 1;
  EXPECT_THROW(make_synthetic_benchmark(c), ValidationError);
  c = SyntheticConfig{};
  c.words_per_concept = 1;
  EXPECT_THROW(make_synthetic_benchmark(c), ValidationError);
  c = SyntheticConfig{};
  c.dim = 0;
  EXPECT_THROW(make_synthetic_benchmark(c), ValidationError);
}

TEST(Synthetic, WritesAllFiles) {
  SyntheticConfig c;
  c.concepts = 10;
  c.dim = 8;
  c.train_constraints = 10;
  const auto dir = std::filesystem::temp_directory_path() / "lexspec_synth_files";
  std::filesystem::remove_all(dir);
  write_synthetic_benchmark(make_synthetic_benchmark(c), dir);
  for (const char* f : {"vocab.txt", "vectors.txt", "constraints.tsv", "test.tsv", "test_vocab.txt", "valid_0.tsv",
                        "valid_0_vocab.txt", "valid_1.tsv", "valid_1_vocab.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace lexspec
