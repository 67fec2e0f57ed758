#include "lexspec/tokenizer.h"

#include <array>
#include <fstream>

#include "lexspec/error.h"

namespace lexspec {

namespace {

constexpr std::array<std::string_view, 3> kReservedNames = {"[SPEC1]", "[SPEC2]",
                                                            "[UNK]"};

// Byte length of the whitespace sequence starting at `pos`, or 0.
std::size_t whitespace_length(std::string_view s, std::size_t pos) {
  const unsigned char c = static_cast<unsigned char>(s[pos]);
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
    return 1;
  }
  auto starts = [&](std::string_view seq) { return s.substr(pos, seq.size()) == seq; };
  if (starts("\xC2\xA0") || starts("\xC2\x85")) return 2;  // NBSP, NEL
  if (starts("\xE3\x80\x80")) return 3;                     // ideographic space
  if (s.size() >= pos + 3 && c == 0xE2 &&
      static_cast<unsigned char>(s[pos + 1]) == 0x80) {
    const unsigned char t = static_cast<unsigned char>(s[pos + 2]);
    // U+2000..U+200A, U+2028, U+2029, U+202F
    if ((t >= 0x80 && t <= 0x8A) || t == 0xA8 || t == 0xA9 || t == 0xAF) return 3;
  }
  if (starts("\xE2\x81\x9F")) return 3;  // U+205F
  return 0;
}

// Offsets of UTF-8 code point starts, plus the end offset.
std::vector<std::size_t> codepoint_boundaries(std::string_view s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) out.push_back(i);
  }
  out.push_back(s.size());
  return out;
}

}  // namespace

bool contains_whitespace(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (whitespace_length(text, i) > 0) return true;
  }
  return false;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t ws = whitespace_length(text, i);
    if (ws > 0) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
      i += ws;
    } else {
      current.push_back(text[i]);
      ++i;
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

SubwordVocabulary::SubwordVocabulary() {
  for (auto name : kReservedNames) {
    ids_.emplace(std::string(name), tokens_.size());
    tokens_.emplace_back(name);
  }
}

SubwordVocabulary::SubwordVocabulary(const std::vector<std::string>& tokens)
    : SubwordVocabulary() {
  for (const auto& t : tokens) add(t);
}

void SubwordVocabulary::add(std::string token) {
  if (token.empty()) throw ValidationError("vocabulary: empty token");
  if (contains_whitespace(token)) {
    throw ValidationError("vocabulary: token contains whitespace: '" + token + "'");
  }
  if (ids_.contains(token)) {
    throw ValidationError("vocabulary: duplicate or reserved token '" + token + "'");
  }
  ids_.emplace(token, tokens_.size());
  tokens_.push_back(std::move(token));
}

std::optional<TokenId> SubwordVocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& SubwordVocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw ValidationError("vocabulary: token id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

std::vector<std::string> SubwordVocabulary::regular_tokens() const {
  return {tokens_.begin() + kReserved, tokens_.end()};
}

std::vector<TokenId> SubwordVocabulary::tokenize(std::string_view word) const {
  const auto bounds = codepoint_boundaries(word);
  std::vector<TokenId> pieces;
  std::size_t start = 0;  // index into bounds
  const std::size_t last = bounds.size() - 1;
  std::string candidate;
  while (start < last) {
    std::optional<TokenId> match;
    std::size_t end = last;
    for (; end > start; --end) {
      candidate.clear();
      if (start > 0) candidate.append(kContinuation);
      candidate.append(word.substr(bounds[start], bounds[end] - bounds[start]));
      if (auto id = find(candidate)) {
        match = id;
        break;
      }
    }
    if (!match) return {kUnk};
    pieces.push_back(*match);
    start = end;
  }
  if (pieces.empty()) return {kUnk};
  return pieces;
}

std::vector<TokenId> SubwordVocabulary::tokenize_text(std::string_view text) const {
  std::vector<TokenId> out;
  for (const auto& piece : split_whitespace(text)) {
    const auto ids = tokenize(piece);
    out.insert(out.end(), ids.begin(), ids.end());
  }
  return out;
}

SubwordVocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  try {
    return SubwordVocabulary(tokens);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_vocabulary(const SubwordVocabulary& vocab,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file " + path.string());
  for (const auto& t : vocab.regular_tokens()) out << t << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace lexspec
