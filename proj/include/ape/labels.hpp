#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ape/align.hpp"
#include "ape/corpus.hpp"
#include "ape/synthetic.hpp"
#include "ape/vocab.hpp"

namespace ape {

inline constexpr int kMlmPercent = 15;

// Lexicon lookup; digit-run tokens are NUM, anything unknown (separators
// included) gets the default class.
std::vector<int> tag_pos(const Tokens& tokens);
std::vector<int> tag_ner(const Tokens& tokens);

struct MlmMask {
  Ids input_ids;                    // encoder ids with masked positions set to <mask>
  std::vector<std::size_t> positions;  // ascending
  Ids target_ids;                   // original ids at `positions`
};

// round(0.15 * len), halves rounding up.
std::size_t mlm_mask_count(std::size_t length);

// Masks mlm_mask_count(len) positions chosen uniformly among non-reserved ids.
MlmMask mask_mlm(const Ids& encoder_ids, std::uint64_t seed);

// Per-example targets of the five auxiliary subtasks, except the MLM mask,
// which is redrawn every epoch.
struct TaskLabels {
  std::vector<int> pos;  // over the full encoder input
  std::vector<int> ner;  // over the full encoder input
  KtLabels kt_enc;       // over the full encoder input
  KtLabels kt_dec;       // over pe
};

// Throws MissingSegment unless mt and mt_ext are present.
TaskLabels build_task_labels(const ApeExample& example);

struct ClassCounts {
  std::vector<std::size_t> pos = std::vector<std::size_t>(kNumPosTags, 0);
  std::vector<std::size_t> ner = std::vector<std::size_t>(kNumNerTags, 0);
  std::vector<std::size_t> kt_enc = std::vector<std::size_t>(kNumKtTags, 0);
  std::vector<std::size_t> kt_dec = std::vector<std::size_t>(kNumKtTags, 0);
};

ClassCounts count_classes(std::span<const TaskLabels> labels);

// Majority count over minority count, over classes that occur at least once.
// Returns 1 for fewer than two observed classes.
double imbalance_ratio(std::span<const std::size_t> counts);

// Label files mirror the corpus TSV and append the space-joined columns
// pos, ner, mlm (masked positions), kt_enc, kt_dec.
void write_label_file(std::ostream& out, const std::vector<ApeExample>& corpus, const Vocab& vocab,
                      std::uint64_t mask_seed);

}  // namespace ape
