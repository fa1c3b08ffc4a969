#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ape/vocab.hpp"

namespace ape {

// One (src, mt, pe, mt_ext) quadruple. All present sequences are non-empty and
// free of reserved tokens; validate() enforces this.
struct ApeExample {
  Tokens src;
  Tokens mt;
  Tokens pe;
  std::optional<Tokens> mt_ext;

  bool has_mt() const noexcept { return !mt.empty(); }
  bool has_mt_ext() const noexcept { return mt_ext.has_value() && !mt_ext->empty(); }

  bool operator==(const ApeExample&) const = default;
};

// Throws DataError when an invariant of ApeExample is violated.
void validate(const ApeExample& example);

enum class Stage { Step1, Step2, Step3, FineTune };

std::string_view to_string(Stage stage);
// Accepts "step1", "step2", "step3", "finetune". Throws ConfigError.
Stage parse_stage(std::string_view name);

// Half-open range of encoder positions.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const Span&) const = default;
};

struct SegmentBounds {
  Span src;
  std::optional<Span> mt;
  std::optional<Span> mt_ext;
  bool operator==(const SegmentBounds&) const = default;
};

struct StageInput {
  Ids encoder_ids;
  Ids decoder_target_ids;  // <bos> pe <eos>
  SegmentBounds segments;
  Stage stage = Stage::FineTune;
};

// Encoder token sequence for a stage:
//   Step1           src
//   Step2           src <sep> mt
//   Step3/FineTune  src <sep> mt <sep> mt_ext
// Throws MissingSegment when the stage needs a segment the example lacks.
Tokens encoder_tokens(const ApeExample& example, Stage stage);

StageInput assemble_stage_input(const ApeExample& example, Stage stage, const Vocab& vocab);

// Maximal ASCII digit runs, in order of appearance.
std::vector<std::string> numeric_tokens(const Tokens& tokens);

// Keeps an example iff src and pe carry the same multiset of numbers.
bool number_filter(const ApeExample& example);

std::vector<ApeExample> apply_number_filter(const std::vector<ApeExample>& corpus);

// Corpus files: UTF-8 TSV `src \t mt \t pe \t mt_ext`, tokens space-joined,
// mt_ext may be empty or omitted, lines starting with '#' are comments.
std::vector<ApeExample> read_corpus(std::istream& in);
std::vector<ApeExample> read_corpus_file(const std::string& path);
void write_corpus(std::ostream& out, const std::vector<ApeExample>& corpus);
void write_corpus_file(const std::string& path, const std::vector<ApeExample>& corpus);

}  // namespace ape
