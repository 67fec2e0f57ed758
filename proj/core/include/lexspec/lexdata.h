#pragma once

// Synset records, synonym constraints and the mining pipeline that turns a
// multilingual synset dump into constraint pairs.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lexspec {

// Two or three lowercase ASCII letters.
bool is_language_code(std::string_view code);

struct Lemma {
  std::string lang;
  std::string text;
  bool is_auto_translation = false;
  bool is_redirection = false;
};

struct GlossEntry {
  std::string lang;
  std::string text;
};

struct SynsetRecord {
  std::string synset_id;
  bool is_named_entity = false;
  std::vector<Lemma> lemmas;
  std::vector<GlossEntry> glosses;
};

struct Gloss {
  std::string text;
  std::string lang;
  friend bool operator==(const Gloss&, const Gloss&) = default;
};

// One synonym pair. Each optional gloss is in a language different from the
// language of the word in the same slot.
struct ConstraintPair {
  std::string w1;
  std::string l1;
  std::string w2;
  std::string l2;
  std::optional<Gloss> g1;
  std::optional<Gloss> g2;
  std::string synset_id;

  friend bool operator==(const ConstraintPair&, const ConstraintPair&) = default;
};

// Throws ValidationError when a ConstraintPair invariant is violated.
void validate_constraint(const ConstraintPair& pair);

class FrequencyList {
 public:
  FrequencyList() = default;
  // `words` in descending frequency; duplicates are rejected.
  FrequencyList(std::string lang, std::vector<std::string> words);

  const std::string& lang() const { return lang_; }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  // 1-based rank, nullopt for unknown words.
  std::optional<std::size_t> rank(std::string_view word) const;

 private:
  std::string lang_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> ranks_;
};

using FrequencyTable = std::map<std::string, FrequencyList>;

struct MiningConfig {
  std::set<std::string> languages;
  std::size_t seed_count = 1000;
  std::size_t frequency_cutoff = 15000;
  std::set<std::string> stopwords;
  // (word, lang) pairs that must never appear in a constraint.
  std::set<std::pair<std::string, std::string>> exclusion_words;
  // Gloss languages tried first, in this order; remaining glosses follow in
  // dump order.
  std::vector<std::string> gloss_language_priority = {"en"};

  void validate() const;
};

// One JSON object per line. Blank lines are skipped.
std::vector<SynsetRecord> load_synset_dump(const std::filesystem::path& path);
std::vector<SynsetRecord> parse_synset_dump(std::string_view text,
                                            std::string_view source = "<memory>");

// One word per line, most frequent first.
FrequencyList load_frequency_list(const std::filesystem::path& path, std::string lang);
// Reads <dir>/<lang>.freq for every requested language.
FrequencyTable load_frequency_dir(const std::filesystem::path& dir,
                                  const std::set<std::string>& langs);

// The first N words of the English list that are not stopwords.
std::vector<std::string> select_seed_words(const FrequencyList& freq_en,
                                           const MiningConfig& config);

// Mines every synonym pair from synsets that contain a seed word (matched as
// a lemma in any configured language). English seeds come from freqs["en"].
std::vector<ConstraintPair> mine_constraints(const std::vector<SynsetRecord>& dump,
                                             const FrequencyTable& freqs,
                                             const MiningConfig& config);

// Nine tab-separated columns with a header row:
// w1 l1 w2 l2 g1 gl1 g2 gl2 synset_id. Absent glosses are empty strings.
void write_constraints(const std::vector<ConstraintPair>& pairs,
                       const std::filesystem::path& path);
std::vector<ConstraintPair> read_constraints(const std::filesystem::path& path);
std::string format_constraint_row(const ConstraintPair& pair);
extern const char* const kConstraintHeader;

// (word, lang) lines "word<TAB>lang".
std::set<std::pair<std::string, std::string>> load_exclusions(
    const std::filesystem::path& path);
std::set<std::string> load_word_set(const std::filesystem::path& path);

}  // namespace lexspec
