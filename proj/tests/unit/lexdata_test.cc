#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "lexspec/error.h"
#include "lexspec/lexdata.h"
#include "lexspec/tokenizer.h"

namespace lexspec {
namespace {

namespace fs = std::filesystem;

const fs::path kData = fs::path(LEXSPEC_TEST_DATA) / "mining";

MiningConfig fixture_config() {
  MiningConfig c;
  c.languages = {"bg", "de", "en", "fr", "ht", "it", "nl", "ro", "tl"};
  c.seed_count = 8;
  c.frequency_cutoff = 10;
  c.stopwords = load_word_set(kData / "stopwords.txt");
  c.exclusion_words = load_exclusions(kData / "exclusions.tsv");
  return c;
}

std::vector<ConstraintPair> mine_fixture() {
  const MiningConfig c = fixture_config();
  std::set<std::string> langs = c.languages;
  return mine_constraints(load_synset_dump(kData / "dump.jsonl"), load_frequency_dir(kData / "freq", langs), c);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("lexspec_lexdata_" + name); }

TEST(Lexdata, LanguageCodes) {
  EXPECT_TRUE(is_language_code("en"));
  EXPECT_TRUE(is_language_code("ceb"));
  EXPECT_FALSE(is_language_code("EN"));
  EXPECT_FALSE(is_language_code("e"));
  EXPECT_FALSE(is_language_code("engl"));
}

TEST(Lexdata, ConstraintInvariants) {
  ConstraintPair p{"cat", "en", "chat", "fr", std::nullopt, std::nullopt, "s"};
  EXPECT_NO_THROW(validate_constraint(p));
  p.g1 = Gloss{"a pet", "en"};
  EXPECT_THROW(validate_constraint(p), ValidationError);
  p.g1 = Gloss{"un animal", "fr"};
  EXPECT_NO_THROW(validate_constraint(p));
  p.w2 = "cat";
  p.l2 = "en";
  EXPECT_THROW(validate_constraint(p), ValidationError);
  p.w2 = "new york";
  EXPECT_THROW(validate_constraint(p), ValidationError);
}

TEST(Lexdata, FrequencyListRanks) {
  const FrequencyList f("en", {"the", "cat", "dog"});
  EXPECT_EQ(f.rank("the"), 1u);
  EXPECT_EQ(f.rank("dog"), 3u);
  EXPECT_EQ(f.rank("emu"), std::nullopt);
  EXPECT_THROW(FrequencyList("en", {"a", "a"}), ValidationError);
}

TEST(Lexdata, SeedWords) {
  MiningConfig c;
  c.languages = {"en"};
  c.stopwords = {"the", "of"};
  c.seed_count = 2;
  EXPECT_EQ(select_seed_words(FrequencyList("en", {"the", "of", "cat", "dog"}), c),
            (std::vector<std::string>{"cat", "dog"}));
  c.stopwords.clear();
  c.seed_count = 3;
  EXPECT_EQ(select_seed_words(FrequencyList("en", {"a", "b", "c"}), c), (std::vector<std::string>{"a", "b", "c"}));
  c.seed_count = 4;
  EXPECT_THROW(select_seed_words(FrequencyList("en", {"a", "b", "c"}), c), ValidationError);
  c.seed_count = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Lexdata, DumpParsing) {
  EXPECT_TRUE(parse_synset_dump("").empty());
  EXPECT_TRUE(parse_synset_dump("\n\n").empty());
  const auto dump = load_synset_dump(kData / "dump.jsonl");
  ASSERT_EQ(dump.size(), 9u);
  EXPECT_EQ(dump[0].synset_id, "bn:00064584n");
  EXPECT_EQ(dump[0].lemmas.size(), 8u);
  EXPECT_TRUE(dump[0].lemmas[5].is_auto_translation);
  EXPECT_TRUE(dump[0].lemmas[6].is_redirection);
  EXPECT_TRUE(dump[4].is_named_entity);
}

TEST(Lexdata, DumpErrorsCarryLineNumbersAndIds) {
  const std::string ok = R"({"synset_id": "s1", "is_named_entity": false, "lemmas": [], "glosses": []})";
  try {
    parse_synset_dump(ok + "\n{not json\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  try {
    parse_synset_dump(ok + "\n" + ok + "\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("s1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_synset_dump(R"({"synset_id": "", "is_named_entity": false, "lemmas": [], "glosses": []})"),
               ValidationError);
  EXPECT_THROW(parse_synset_dump(
                   R"({"synset_id": "s", "is_named_entity": false, "lemmas": [{"lang": "EN", "text": "x", "is_auto_translation": false, "is_redirection": false}], "glosses": []})"),
               ValidationError);
  EXPECT_THROW(load_synset_dump(temp_file("missing.jsonl")), IoError);
}

struct Expected {
  std::string w1, l1, w2, l2, gl1, gl2, synset;
};

TEST(Lexdata, MiningFixtureYieldsExactPairs) {
  const std::map<std::string, std::map<std::string, std::string>> gloss_text = {
      {"bn:00064584n",
       {{"bg", "Нещо, създадено от човешка дейност."},
        {"en", "Something that has been made or created."},
        {"fr", "Ce qui a été fabriqué ou créé."}}},
      {"bn:00060927n", {{"bg", "Времето преди настоящето."}, {"de", "Die Zeit vor der Gegenwart."}}},
      {"bn:00055644n", {{"fr", "Moyen de paiement accepté."}, {"en", "A medium of exchange for goods."}}},
      {"bn:00019319n", {{"en", "A very large and busy city."}, {"it", "Una città molto grande."}}},
      {"bn:00000002n", {{"en", "A large city on the east coast."}, {"de", "Eine große Stadt an der Ostküste."}}},
      {"bn:00000003n", {{"en", "A large town."}, {"fr", "Une grande agglomération."}}},
  };
  const std::vector<Expected> expected = {
      {"production", "en", "produit", "fr", "bg", "en", "bn:00064584n"},
      {"production", "en", "production", "fr", "bg", "en", "bn:00064584n"},
      {"production", "en", "Produktion", "de", "bg", "en", "bn:00064584n"},
      {"produit", "fr", "production", "fr", "en", "en", "bn:00064584n"},
      {"produit", "fr", "Produktion", "de", "en", "en", "bn:00064584n"},
      {"production", "fr", "Produktion", "de", "en", "en", "bn:00064584n"},
      {"passato", "it", "gestern", "de", "bg", "bg", "bn:00060927n"},
      {"passato", "it", "past", "en", "bg", "bg", "bn:00060927n"},
      {"gestern", "de", "past", "en", "bg", "bg", "bn:00060927n"},
      {"lajan", "ht", "centen", "nl", "en", "en", "bn:00055644n"},
      {"lajan", "ht", "money", "en", "en", "fr", "bn:00055644n"},
      {"centen", "nl", "money", "en", "en", "fr", "bn:00055644n"},
      {"lungsod", "tl", "oraș", "ro", "en", "en", "bn:00019319n"},
      {"lungsod", "tl", "metropolis", "en", "en", "it", "bn:00019319n"},
      {"lungsod", "tl", "metropoli", "it", "en", "en", "bn:00019319n"},
      {"oraș", "ro", "metropolis", "en", "en", "it", "bn:00019319n"},
      {"oraș", "ro", "metropoli", "it", "en", "en", "bn:00019319n"},
      {"metropolis", "en", "metropoli", "it", "it", "en", "bn:00019319n"},
      {"york", "en", "york", "de", "de", "en", "bn:00000002n"},
      {"ville", "fr", "Stadt", "de", "en", "en", "bn:00000003n"},
  };
  const auto pairs = mine_fixture();
  ASSERT_EQ(pairs.size(), expected.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& e = expected[i];
    const auto& texts = gloss_text.at(e.synset);
    const ConstraintPair want{e.w1, e.l1, e.w2, e.l2, Gloss{texts.at(e.gl1), e.gl1}, Gloss{texts.at(e.gl2), e.gl2},
                              e.synset};
    EXPECT_EQ(pairs[i], want) << "pair " << i << ": " << format_constraint_row(pairs[i]);
  }
}

TEST(Lexdata, MiningFiltersHoldOnFixture) {
  const auto pairs = mine_fixture();
  const auto excluded = load_exclusions(kData / "exclusions.tsv");
  for (const auto& p : pairs) {
    EXPECT_NO_THROW(validate_constraint(p));
    EXPECT_NE(p.synset_id, "bn:00000001n");
    EXPECT_FALSE(contains_whitespace(p.w1) || contains_whitespace(p.w2));
    EXPECT_FALSE(excluded.contains({p.w1, p.l1}) || excluded.contains({p.w2, p.l2}));
    for (const std::string w : {"fabrication", "output", "Ausstoß", "rare"}) {
      EXPECT_NE(p.w1, w);
      EXPECT_NE(p.w2, w);
    }
  }
}

TEST(Lexdata, DuplicateLemmasAreDeduplicated) {
  // "money" appears twice in bn:00055644n.
  std::size_t money_pairs = 0;
  for (const auto& p : mine_fixture()) {
    if (p.synset_id == "bn:00055644n" && (p.w1 == "money" || p.w2 == "money")) ++money_pairs;
  }
  EXPECT_EQ(money_pairs, 2u);
}

TEST(Lexdata, GlossFallsBackToEmptyWhenNoneQualifies) {
  const std::string line =
      R"({"synset_id": "s", "is_named_entity": false, "lemmas": [{"lang": "en", "text": "cat", "is_auto_translation": false, "is_redirection": false}, {"lang": "en", "text": "kitty", "is_auto_translation": false, "is_redirection": false}], "glosses": [{"lang": "en", "text": "A pet."}, {"lang": "en", "text": "A feline."}]})";
  MiningConfig c;
  c.languages = {"en"};
  c.seed_count = 1;
  c.frequency_cutoff = 5;
  FrequencyTable freqs;
  freqs["en"] = FrequencyList("en", {"cat", "kitty"});
  const auto pairs = mine_constraints(parse_synset_dump(line), freqs, c);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_FALSE(pairs[0].g1.has_value());
  EXPECT_FALSE(pairs[0].g2.has_value());
}

TEST(Lexdata, MissingFrequencyListFailsNamingLanguage) {
  MiningConfig c = fixture_config();
  FrequencyTable freqs = load_frequency_dir(kData / "freq", {"en", "fr"});
  try {
    mine_constraints(load_synset_dump(kData / "dump.jsonl"), freqs, c);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bg"), std::string::npos) << e.what();
  }
  try {
    load_frequency_dir(kData / "freq", {"en", "xx"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("xx"), std::string::npos) << e.what();
  }
}

TEST(Lexdata, MiningIsByteIdenticalAcrossRuns) {
  const fs::path a = temp_file("a.tsv"), b = temp_file("b.tsv");
  write_constraints(mine_fixture(), a);
  write_constraints(mine_fixture(), b);
  EXPECT_EQ(slurp(a), slurp(b));
  fs::remove(a);
  fs::remove(b);
}

TEST(Lexdata, ConstraintFileRoundTrip) {
  const fs::path path = temp_file("rt.tsv");
  const std::vector<ConstraintPair> pairs = {
      {"cat", "en", "chat", "fr", std::nullopt, std::nullopt, "s1"},
      {"dog", "en", "hund", "de", std::nullopt, std::nullopt, "s2"},
      {"oraș", "ro", "city", "en", Gloss{"A large town.", "en"}, Gloss{"Un oraș mare.", "ro"}, "s3"},
  };
  write_constraints(pairs, path);
  EXPECT_EQ(read_constraints(path), pairs);
  const std::string text = slurp(path);
  EXPECT_EQ(text.substr(0, text.find('\n')), kConstraintHeader);
  EXPECT_EQ(format_constraint_row(pairs[0]), "cat\ten\tchat\tfr\t\t\t\t\ts1");

  write_constraints({}, path);
  EXPECT_TRUE(read_constraints(path).empty());
  EXPECT_EQ(slurp(path), std::string(kConstraintHeader) + "\n");
  fs::remove(path);
}

TEST(Lexdata, ConstraintFileErrors) {
  const fs::path path = temp_file("bad.tsv");
  std::ofstream(path) << kConstraintHeader << "\ncat\ten\tchat\tfr\n";
  try {
    read_constraints(path);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  const ConstraintPair tabbed{"cat", "en", "chat", "fr", Gloss{"a\tb", "de"}, std::nullopt, "s"};
  EXPECT_THROW(write_constraints({tabbed}, path), ValidationError);
  fs::remove(path);
  EXPECT_THROW(read_constraints(path), IoError);
}

}  // namespace
}  // namespace lexspec
