#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ape/corpus.hpp"
#include "ape/vocab.hpp"

namespace ape {

// Closed tag sets of the synthetic grammar. Index 0 is the default class.
enum class PosTag : int { X = 0, Det, Adj, Noun, Verb, Adp, Adv, Conj, Num, Propn };
enum class NerTag : int { O = 0, Per, Loc, Org };

inline constexpr int kNumPosTags = 10;
inline constexpr int kNumNerTags = 4;

std::string_view to_string(PosTag tag);
std::string_view to_string(NerTag tag);

struct LexEntry {
  std::string target;  // pe / mt side
  std::string source;  // src side
  PosTag pos = PosTag::X;
  NerTag ner = NerTag::O;
};

// Word list of the synthetic language pair. Source words are a bijective
// rename of target words (names and numbers are shared by both sides).
class Lexicon {
 public:
  static const Lexicon& standard();

  const std::vector<LexEntry>& entries() const noexcept { return entries_; }

  // Lookup on either side; nullptr when unknown.
  const LexEntry* find(std::string_view token) const;

  const std::string& to_source(std::string_view target) const;
  const std::string& to_target(std::string_view source) const;

  PosTag pos_of(std::string_view token) const;
  NerTag ner_of(std::string_view token) const;

  // Entry indices for one part of speech (and, for names, one entity class),
  // in lexicon order.
  const std::vector<std::size_t>& words(PosTag pos) const;
  const std::vector<std::size_t>& names(NerTag ner) const;

  // Reserved tokens, then every target word, then every source-only word.
  Vocab make_vocab() const;

 private:
  Lexicon();

  std::vector<LexEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_target_;
  std::unordered_map<std::string, std::size_t> by_source_;
  std::vector<std::vector<std::size_t>> by_pos_;
  std::vector<std::vector<std::size_t>> by_ner_;
};

enum class Domain { News, Ape, Mixed };

std::string_view to_string(Domain domain);

// Edit rates of the corrupted translations plus corpus-level knobs.
struct NoiseProfile {
  double mt_rate = 0.15;   // per-token edit probability for mt
  double ext_rate = 0.12;  // per-token edit probability for mt_ext
  bool with_ext = true;
  double number_mismatch_rate = 0.0;  // fraction of pairs with a broken number
  Domain domain = Domain::Ape;

  static NoiseProfile news();
  static NoiseProfile ape();
  static NoiseProfile mixed();
  // "news" or "ape"; throws ConfigError otherwise.
  static NoiseProfile named(std::string_view name);

  // Throws ConfigError for rates outside [0, 1].
  void validate() const;
};

// pe is drawn from the grammar, src is its reordered rename, mt and mt_ext
// are independent corruptions of pe. Deterministic in `seed`.
std::vector<ApeExample> generate_synthetic_corpus(std::uint64_t seed, std::size_t n_examples,
                                                  const NoiseProfile& profile);

// Inverse of the src transform: recovers pe from a clean src.
Tokens source_to_target(const Tokens& src);
Tokens target_to_source(const Tokens& pe);

}  // namespace ape
