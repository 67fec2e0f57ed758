#include "run_config.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "lexspec/error.h"

namespace lexspec::cli {

const std::vector<KeySpec>& known_keys() {
  static const std::vector<KeySpec> keys = {
      {"seed", "0", "seed for every stochastic step"},
      {"out", "", "output directory"},
      // mining
      {"dump", "", "synset dump (JSON lines)"},
      {"freq_dir", "", "directory of <lang>.freq frequency lists"},
      {"langs", "", "comma-separated language codes"},
      {"seed_count", "1000", "number of English seed words N"},
      {"frequency_cutoff", "15000", "frequency rank cutoff k"},
      {"exclusions", "", "word<TAB>lang file of excluded words"},
      {"stopwords", "", "English stopword list, one per line"},
      {"gloss_priority", "en", "gloss languages tried first, comma-separated"},
      // model
      {"model_in", "", "checkpoint to start from"},
      {"vocab", "", "subword vocabulary for a fresh model"},
      {"vectors", "", "word vectors copied into a fresh model"},
      {"dim", "48", "model width"},
      {"num_layers", "2", "encoder blocks"},
      {"ffn_dim", "96", "feed-forward width"},
      {"adapter_bottleneck", "auto", "adapter width; auto = ceil(dim/16)"},
      {"max_len", "32", "maximum sequence length"},
      {"init_seed", "", "initialization seed; defaults to seed"},
      // training
      {"constraints", "", "constraint TSV"},
      {"validation", "", "comma-separated BLI validation pair files"},
      {"validation_vocab", "", "comma-separated target vocabularies, one per validation file"},
      {"validation_layer", "", "layer scored during validation; defaults to the last"},
      {"lr", "2e-5", "learning rate"},
      {"epochs", "15", "training epochs"},
      {"batch_size", "32", "constraint pairs per batch"},
      {"mode", "full", "full or adapter"},
      {"sense_level", "false", "encode words with their glosses"},
      {"alpha", "0.5", "language-pair sampling exponent"},
      {"tau", "0.07", "InfoNCE temperature"},
      {"positives", "all", "positive set: all or cross_slot"},
      {"beta1", "0.9", "AdamW beta1"},
      {"beta2", "0.999", "AdamW beta2"},
      {"eps", "1e-8", "AdamW epsilon"},
      {"weight_decay", "0.01", "AdamW decoupled weight decay"},
      // evaluation
      {"checkpoint", "", "checkpoint directory to evaluate"},
      {"dataset", "", "evaluation dataset file"},
      {"target_vocab", "", "BLI target vocabulary"},
      {"layer", "sweep", "layer index or 'sweep'"},
      // analysis
      {"features", "", "language feature CSV"},
      {"sample", "", "comma-separated language sample"},
      {"train_langs", "", "comma-separated training languages"},
      {"test_langs", "", "comma-separated test languages"},
      {"target", "", "subset size"},
      {"budget", "", "constraints per language pair"},
      // synthetic benchmark
      {"concepts", "100", "latent concepts"},
      {"words_per_concept", "2", "words per concept and language"},
      {"train_constraints", "150", "training constraints drawn from the pool"},
      {"noise", "0.5", "word noise scale"},
      {"shift", "2.0", "language offset scale"},
      {"theta", "0.8", "cross-lingual distortion angle"},
  };
  return keys;
}

const KeySpec* find_key(std::string_view name) {
  for (const auto& k : known_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string env_name(std::string_view key) {
  std::string out = "LEXSPEC_";
  for (char c : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : known_keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, std::string value) {
  if (!find_key(key)) throw ValidationError("unknown configuration key '" + key + "'");
  values_[key] = std::move(value);
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ValidationError(where + ": expected key=value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (!find_key(key)) throw ValidationError(where + ": unknown configuration key '" + key + "'");
    values_[key] = trim(std::string_view(body).substr(eq + 1));
  }
}

void RunConfig::apply_environment() {
  for (const auto& k : known_keys()) {
    if (const char* v = std::getenv(env_name(k.name).c_str())) values_[k.name] = v;
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError("unknown configuration key '" + key + "'");
  return it->second;
}

std::string RunConfig::require(const std::string& key) const {
  const std::string& v = get(key);
  if (v.empty()) throw ValidationError("missing required setting '" + key + "'");
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string v = require(key);
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw ValidationError("setting '" + key + "' must be a number, got '" + v + "'");
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string v = require(key);
  if (v.find_first_not_of("0123456789") == std::string::npos) {
    try {
      return std::stoull(v);
    } catch (const std::exception&) {
    }
  }
  throw ValidationError("setting '" + key + "' must be a non-negative integer, got '" + v + "'");
}

std::size_t RunConfig::get_size(const std::string& key) const {
  return static_cast<std::size_t>(get_u64(key));
}

bool RunConfig::get_bool(const std::string& key) const {
  std::string v = require(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("setting '" + key + "' must be true or false, got '" + v + "'");
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const {
  std::vector<std::string> out;
  const std::string& v = get(key);
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const std::string item = trim(std::string_view(v).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string RunConfig::format(const std::vector<std::string>& keys) const {
  std::vector<std::string> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::string out;
  for (const auto& k : sorted) out += k + "=" + get(k) + "\n";
  return out;
}

void RunConfig::write(const std::filesystem::path& path, const std::vector<std::string>& keys) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << format(keys);
}

}  // namespace lexspec::cli
