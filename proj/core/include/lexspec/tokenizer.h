#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lexspec {

using TokenId = std::size_t;

// Subword inventory with three reserved entries at fixed ids:
//   0 [SPEC1]  sequence start
//   1 [SPEC2]  sequence end / segment separator
//   2 [UNK]    unknown word
// Regular tokens follow in insertion order. Word-internal pieces carry the
// "##" continuation prefix.
class SubwordVocabulary {
 public:
  static constexpr TokenId kSpec1 = 0;
  static constexpr TokenId kSpec2 = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr std::size_t kReserved = 3;
  static constexpr std::string_view kContinuation = "##";

  SubwordVocabulary();
  // Throws ValidationError on duplicates, empty tokens, reserved names or
  // tokens containing whitespace.
  explicit SubwordVocabulary(const std::vector<std::string>& tokens);

  std::size_t size() const { return tokens_.size(); }
  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token(TokenId id) const;
  // Regular tokens only, in id order.
  std::vector<std::string> regular_tokens() const;

  // Greedy longest-match segmentation of a single word. A position where no
  // vocabulary piece matches turns the whole word into one [UNK].
  std::vector<TokenId> tokenize(std::string_view word) const;
  // Whitespace split, then tokenize() per piece.
  std::vector<TokenId> tokenize_text(std::string_view text) const;

 private:
  void add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// One token per line; line i (0-based) receives id kReserved + i.
SubwordVocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const SubwordVocabulary& vocab,
                     const std::filesystem::path& path);

// Splits on ASCII whitespace and the common Unicode space separators.
std::vector<std::string> split_whitespace(std::string_view text);
bool contains_whitespace(std::string_view text);

}  // namespace lexspec
