#include "ape/vocab.hpp"

#include <cctype>

#include "ape/error.hpp"

namespace ape {

Vocab::Vocab() {
  for (auto t : {kSepToken, kMaskToken, kPadToken, kBosToken, kEosToken, kUnkToken}) {
    add(t);
  }
}

Vocab Vocab::from_tokens(const Tokens& tokens) {
  Vocab v;
  for (const auto& t : tokens) v.add(t);
  return v;
}

TokenId Vocab::add(std::string_view token) {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), id);
  return id;
}

TokenId Vocab::id(std::string_view token) const { return find(token).value_or(kUnk); }

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (!contains(id)) throw VocabError("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::is_reserved_token(std::string_view token) noexcept {
  return token == kSepToken || token == kMaskToken || token == kPadToken || token == kBosToken ||
         token == kEosToken || token == kUnkToken;
}

Tokens split_whitespace(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join_tokens(const Tokens& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

Ids tokenize(std::string_view text, const Vocab& vocab) {
  auto tokens = split_whitespace(text);
  if (tokens.empty()) throw EmptyInput("empty input after trimming");
  return to_ids(tokens, vocab);
}

Ids to_ids(const Tokens& tokens, const Vocab& vocab) {
  Ids ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

Tokens to_tokens(const Ids& ids, const Vocab& vocab) {
  Tokens out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(vocab.token(id));
  return out;
}

std::string detokenize(const Ids& ids, const Vocab& vocab) {
  return join_tokens(to_tokens(ids, vocab));
}

}  // namespace ape
