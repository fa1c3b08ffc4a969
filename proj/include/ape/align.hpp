#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "ape/corpus.hpp"
#include "ape/vocab.hpp"

namespace ape {

// One-to-one word alignment between a left and a right token sequence.
// Pairs are kept sorted by left index.
class Alignment {
 public:
  using Pair = std::pair<std::size_t, std::size_t>;

  Alignment(std::size_t left_len, std::size_t right_len);

  // Throws std::invalid_argument when out of bounds or when either index is
  // already aligned.
  void add(std::size_t left, std::size_t right);

  std::optional<std::size_t> right_of(std::size_t left) const;
  std::optional<std::size_t> left_of(std::size_t right) const;

  const std::vector<Pair>& pairs() const noexcept { return pairs_; }
  std::size_t left_len() const noexcept { return left_to_right_.size(); }
  std::size_t right_len() const noexcept { return right_to_left_.size(); }

 private:
  std::vector<Pair> pairs_;
  std::vector<std::optional<std::size_t>> left_to_right_;
  std::vector<std::optional<std::size_t>> right_to_left_;
};

inline constexpr double kDiceThreshold = 0.5;

// Dice coefficient over the multisets of character trigrams of '#' + word + '#'.
double trigram_dice(std::string_view a, std::string_view b);

// Greedy aligner. Exact matches first, each left token taking the leftmost
// free equal right token. The remaining tokens are then paired by highest
// trigram Dice strictly above kDiceThreshold, ties going to the smallest
// (left, right) index pair.
Alignment align(const Tokens& left, const Tokens& right);

enum class KtTag : int { Keep = 0, Translate = 1 };
inline constexpr int kNumKtTags = 2;

using KtLabels = std::vector<KtTag>;

char to_char(KtTag tag);  // 'K' or 'T'

// mt_j is Keep iff it is aligned to an identical pe token.
KtLabels label_mt_against_pe(const Tokens& mt, const Tokens& pe);

// src_i copies the label of its aligned mt token, Translate when unaligned.
KtLabels project_labels_to_src(const Tokens& src, const Tokens& mt, const KtLabels& mt_labels);

// Labels over the full `src <sep> mt <sep> mt_ext` encoder input; separators
// are Keep. Throws MissingSegment.
KtLabels build_encoder_kt(const ApeExample& example);

// pe_i is Keep iff it is aligned to an identical mt token.
KtLabels build_decoder_kt(const Tokens& mt, const Tokens& pe);

}  // namespace ape
