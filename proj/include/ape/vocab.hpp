#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ape {

using TokenId = std::int32_t;
using Ids = std::vector<TokenId>;
using Tokens = std::vector<std::string>;

// Token <-> id bijection. Ids 0..5 are reserved for the special tokens; the
// first ordinary token gets id 6.
class Vocab {
 public:
  static constexpr TokenId kSep = 0;
  static constexpr TokenId kMask = 1;
  static constexpr TokenId kPad = 2;
  static constexpr TokenId kBos = 3;
  static constexpr TokenId kEos = 4;
  static constexpr TokenId kUnk = 5;
  static constexpr TokenId kNumReserved = 6;

  static constexpr std::string_view kSepToken = "<sep>";
  static constexpr std::string_view kMaskToken = "<mask>";
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kBosToken = "<bos>";
  static constexpr std::string_view kEosToken = "<eos>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocab();

  // Builds a vocab holding the reserved tokens followed by `tokens` in order
  // (duplicates collapse onto their first occurrence).
  static Vocab from_tokens(const Tokens& tokens);

  // Adds `token` if absent and returns its id.
  TokenId add(std::string_view token);

  // Id of `token`, or kUnk when absent.
  TokenId id(std::string_view token) const;
  std::optional<TokenId> find(std::string_view token) const;

  // Throws VocabError on an out-of-range id.
  const std::string& token(TokenId id) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  bool contains(TokenId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < tokens_.size();
  }
  static bool is_reserved(TokenId id) noexcept { return id >= 0 && id < kNumReserved; }
  static bool is_reserved_token(std::string_view token) noexcept;

  // All tokens in id order, reserved ones included.
  const Tokens& tokens() const noexcept { return tokens_; }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  Tokens tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Splits on ASCII whitespace.
Tokens split_whitespace(std::string_view text);
std::string join_tokens(const Tokens& tokens, std::string_view sep = " ");

// Whitespace tokenization; unknown tokens map to <unk>. Throws EmptyInput
// when nothing is left after trimming.
Ids tokenize(std::string_view text, const Vocab& vocab);
Ids to_ids(const Tokens& tokens, const Vocab& vocab);
Tokens to_tokens(const Ids& ids, const Vocab& vocab);
std::string detokenize(const Ids& ids, const Vocab& vocab);

}  // namespace ape
