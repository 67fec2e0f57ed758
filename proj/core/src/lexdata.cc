#include "lexspec/lexdata.h"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "lexspec/error.h"
#include "lexspec/tokenizer.h"

namespace lexspec {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kConstraintHeader = "w1\tl1\tw2\tl2\tg1\tgl1\tg2\tgl2\tsynset_id";

bool is_language_code(std::string_view code) {
  if (code.size() < 2 || code.size() > 3) return false;
  for (char c : code) {
    if (c < 'a' || c > 'z') return false;
  }
  return true;
}

void validate_constraint(const ConstraintPair& p) {
  if (p.w1.empty() || p.w2.empty()) throw ValidationError("constraint: empty word");
  if (!is_language_code(p.l1) || !is_language_code(p.l2)) {
    throw ValidationError("constraint: malformed language code in (" + p.l1 + ", " + p.l2 + ")");
  }
  if (p.w1 == p.w2 && p.l1 == p.l2) {
    throw ValidationError("constraint: self-pair '" + p.w1 + "' [" + p.l1 + "]");
  }
  if (contains_whitespace(p.w1) || contains_whitespace(p.w2)) {
    throw ValidationError("constraint: word contains whitespace in pair (" + p.w1 + ", " +
                          p.w2 + ")");
  }
  if (p.g1 && p.g1->lang == p.l1) {
    throw ValidationError("constraint: gloss 1 shares the language of '" + p.w1 + "'");
  }
  if (p.g2 && p.g2->lang == p.l2) {
    throw ValidationError("constraint: gloss 2 shares the language of '" + p.w2 + "'");
  }
  if (p.synset_id.empty()) throw ValidationError("constraint: empty synset id");
}

// ---------------------------------------------------------------------------
// Frequency lists

FrequencyList::FrequencyList(std::string lang, std::vector<std::string> words)
    : lang_(std::move(lang)), words_(std::move(words)) {
  ranks_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!ranks_.emplace(words_[i], i + 1).second) {
      throw ValidationError("frequency list [" + lang_ + "]: duplicate word '" + words_[i] +
                            "' at line " + std::to_string(i + 1));
    }
  }
}

std::optional<std::size_t> FrequencyList::rank(std::string_view word) const {
  auto it = ranks_.find(std::string(word));
  if (it == ranks_.end()) return std::nullopt;
  return it->second;
}

FrequencyList load_frequency_list(const fs::path& path, std::string lang) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open frequency list " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    words.push_back(line);
  }
  return FrequencyList(std::move(lang), std::move(words));
}

FrequencyTable load_frequency_dir(const fs::path& dir, const std::set<std::string>& langs) {
  FrequencyTable table;
  for (const auto& lang : langs) {
    const fs::path p = dir / (lang + ".freq");
    if (!fs::exists(p)) {
      throw ValidationError("no frequency list for language '" + lang + "' (expected " +
                            p.string() + ")");
    }
    table.emplace(lang, load_frequency_list(p, lang));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Synset dump

namespace {

SynsetRecord parse_record(const json& j) {
  if (!j.is_object()) throw ValidationError("expected a JSON object");
  SynsetRecord r;
  r.synset_id = j.at("synset_id").get<std::string>();
  if (r.synset_id.empty()) throw ValidationError("empty synset_id");
  r.is_named_entity = j.value("is_named_entity", false);
  for (const auto& l : j.at("lemmas")) {
    Lemma lemma;
    lemma.lang = l.at("lang").get<std::string>();
    lemma.text = l.at("text").get<std::string>();
    lemma.is_auto_translation = l.value("is_auto_translation", false);
    lemma.is_redirection = l.value("is_redirection", false);
    if (!is_language_code(lemma.lang)) {
      throw ValidationError("malformed lemma language code '" + lemma.lang + "'");
    }
    if (lemma.text.empty()) throw ValidationError("empty lemma text");
    r.lemmas.push_back(std::move(lemma));
  }
  for (const auto& g : j.value("glosses", json::array())) {
    GlossEntry gloss{g.at("lang").get<std::string>(), g.at("text").get<std::string>()};
    if (!is_language_code(gloss.lang)) {
      throw ValidationError("malformed gloss language code '" + gloss.lang + "'");
    }
    r.glosses.push_back(std::move(gloss));
  }
  return r;
}

}  // namespace

std::vector<SynsetRecord> parse_synset_dump(std::string_view text, std::string_view source) {
  std::vector<SynsetRecord> out;
  std::unordered_set<std::string> seen;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const std::string where = std::string(source) + ":" + std::to_string(lineno) + ": ";
    SynsetRecord rec;
    try {
      rec = parse_record(json::parse(line));
    } catch (const json::exception& e) {
      throw ValidationError(where + "malformed synset record: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    if (!seen.insert(rec.synset_id).second) {
      throw ValidationError(where + "duplicate synset_id " + rec.synset_id);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<SynsetRecord> load_synset_dump(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open synset dump " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_synset_dump(buf.str(), path.string());
}

// ---------------------------------------------------------------------------
// Mining

void MiningConfig::validate() const {
  if (languages.empty()) throw ValidationError("mining: language set is empty");
  for (const auto& l : languages) {
    if (!is_language_code(l)) throw ValidationError("mining: malformed language code '" + l + "'");
  }
  if (seed_count == 0) throw ValidationError("mining: seed count N must be positive");
  if (frequency_cutoff == 0) throw ValidationError("mining: frequency cutoff k must be positive");
}

std::vector<std::string> select_seed_words(const FrequencyList& freq_en,
                                           const MiningConfig& config) {
  if (config.seed_count == 0) throw ValidationError("seed selection: N must be positive");
  std::vector<std::string> seeds;
  for (const auto& w : freq_en.words()) {
    if (config.stopwords.contains(w)) continue;
    seeds.push_back(w);
    if (seeds.size() == config.seed_count) return seeds;
  }
  throw ValidationError("seed selection: only " + std::to_string(seeds.size()) +
                        " non-stopword entries available, " +
                        std::to_string(config.seed_count) + " requested");
}

namespace {

using WordKey = std::pair<std::string, std::string>;  // (word, lang)

std::optional<Gloss> pick_gloss(const std::vector<const GlossEntry*>& ordered,
                                const std::string& word_lang) {
  for (const GlossEntry* g : ordered) {
    if (g->lang != word_lang) return Gloss{g->text, g->lang};
  }
  return std::nullopt;
}

}  // namespace

std::vector<ConstraintPair> mine_constraints(const std::vector<SynsetRecord>& dump,
                                             const FrequencyTable& freqs,
                                             const MiningConfig& config) {
  config.validate();
  for (const auto& lang : config.languages) {
    if (!freqs.contains(lang)) {
      throw ValidationError("mining: no frequency list for language '" + lang + "'");
    }
  }
  auto en = freqs.find("en");
  if (en == freqs.end()) {
    throw ValidationError("mining: seed selection needs an English frequency list");
  }
  const auto seed_list = select_seed_words(en->second, config);
  const std::unordered_set<std::string> seeds(seed_list.begin(), seed_list.end());

  std::vector<ConstraintPair> out;
  std::set<std::tuple<WordKey, WordKey, std::string>> emitted;

  for (const auto& syn : dump) {
    const bool has_seed = std::any_of(syn.lemmas.begin(), syn.lemmas.end(), [&](const Lemma& l) {
      return config.languages.contains(l.lang) && seeds.contains(l.text);
    });
    if (!has_seed || syn.is_named_entity) continue;

    std::vector<const GlossEntry*> glosses;
    for (const auto& g : syn.glosses) {
      if (config.languages.contains(g.lang)) glosses.push_back(&g);
    }
    if (glosses.size() < 2) continue;
    // Priority languages first, then the rest in dump order.
    std::stable_sort(glosses.begin(), glosses.end(),
                     [&](const GlossEntry* a, const GlossEntry* b) {
                       auto prio = [&](const std::string& lang) {
                         const auto& p = config.gloss_language_priority;
                         return static_cast<std::size_t>(
                             std::find(p.begin(), p.end(), lang) - p.begin());
                       };
                       return prio(a->lang) < prio(b->lang);
                     });

    std::vector<const Lemma*> candidates;
    for (const auto& l : syn.lemmas) {
      if (!config.languages.contains(l.lang)) continue;
      if (l.is_auto_translation || l.is_redirection) continue;
      if (contains_whitespace(l.text)) continue;
      if (config.exclusion_words.contains({l.text, l.lang})) continue;
      const auto r = freqs.at(l.lang).rank(l.text);
      if (!r || *r > config.frequency_cutoff) continue;
      candidates.push_back(&l);
    }

    for (std::size_t i = 0; i < candidates.size(); ++i) {
      for (std::size_t j = i + 1; j < candidates.size(); ++j) {
        const Lemma& a = *candidates[i];
        const Lemma& b = *candidates[j];
        if (a.text == b.text && a.lang == b.lang) continue;
        WordKey ka{a.text, a.lang}, kb{b.text, b.lang};
        if (kb < ka) std::swap(ka, kb);
        if (!emitted.emplace(ka, kb, syn.synset_id).second) continue;
        ConstraintPair p;
        p.w1 = a.text;
        p.l1 = a.lang;
        p.w2 = b.text;
        p.l2 = b.lang;
        p.g1 = pick_gloss(glosses, a.lang);
        p.g2 = pick_gloss(glosses, b.lang);
        p.synset_id = syn.synset_id;
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Constraint TSV

namespace {

void check_field(const std::string& field, const char* column) {
  if (field.find_first_of("\t\n\r") != std::string::npos) {
    throw ValidationError(std::string("constraint file: column ") + column +
                          " contains a tab or newline: '" + field + "'");
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      return cols;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

std::string format_constraint_row(const ConstraintPair& p) {
  validate_constraint(p);
  const std::string g1 = p.g1 ? p.g1->text : "";
  const std::string gl1 = p.g1 ? p.g1->lang : "";
  const std::string g2 = p.g2 ? p.g2->text : "";
  const std::string gl2 = p.g2 ? p.g2->lang : "";
  if ((p.g1 && g1.empty()) || (p.g2 && g2.empty())) {
    throw ValidationError("constraint file: present gloss with empty text");
  }
  const std::pair<const std::string*, const char*> fields[] = {
      {&p.w1, "w1"}, {&p.l1, "l1"},   {&p.w2, "w2"},  {&p.l2, "l2"},          {&g1, "g1"},
      {&gl1, "gl1"}, {&g2, "g2"},     {&gl2, "gl2"},  {&p.synset_id, "synset_id"}};
  std::string row;
  for (std::size_t i = 0; i < std::size(fields); ++i) {
    check_field(*fields[i].first, fields[i].second);
    if (i > 0) row.push_back('\t');
    row += *fields[i].first;
  }
  return row;
}

void write_constraints(const std::vector<ConstraintPair>& pairs, const fs::path& path) {
  std::string text = std::string(kConstraintHeader) + "\n";
  for (const auto& p : pairs) text += format_constraint_row(p) + "\n";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write constraint file " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ConstraintPair> read_constraints(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open constraint file " + path.string());
  std::vector<ConstraintPair> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != kConstraintHeader) {
        throw ValidationError(path.string() + ":1: unexpected header");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    if (cols.size() != 9) {
      throw ValidationError(where + "expected 9 columns, found " + std::to_string(cols.size()));
    }
    auto gloss = [&](const std::string& text, const std::string& lang) -> std::optional<Gloss> {
      if (text.empty() && lang.empty()) return std::nullopt;
      if (text.empty() || lang.empty()) {
        throw ValidationError(where + "gloss text and language must both be present or absent");
      }
      return Gloss{text, lang};
    };
    ConstraintPair p{cols[0], cols[1], cols[2], cols[3],
                     gloss(cols[4], cols[5]), gloss(cols[6], cols[7]), cols[8]};
    try {
      validate_constraint(p);
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
    out.push_back(std::move(p));
  }
  if (lineno == 0) throw ValidationError(path.string() + ": missing header");
  return out;
}

std::set<std::pair<std::string, std::string>> load_exclusions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open exclusion list " + path.string());
  std::set<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 2) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                            ": expected 'word<TAB>lang'");
    }
    out.emplace(cols[0], cols[1]);
  }
  return out;
}

std::set<std::string> load_word_set(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word list " + path.string());
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

}  // namespace lexspec
