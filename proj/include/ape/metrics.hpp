#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ape/vocab.hpp"

namespace ape {

// Word-level Levenshtein distance (unit costs).
std::size_t edit_distance(const Tokens& hyp, const Tokens& ref);

// Corpus TER without block shifts: 100 * sum edits / sum |ref|.
// Throws MetricError on a length mismatch, an empty corpus or an empty reference.
double ter(std::span<const Tokens> hypotheses, std::span<const Tokens> references);

// Corpus BLEU-4 with brevity penalty. Orders 2-4 use add-one smoothing
// (numerator + 1 over denominator + 1); order 1 is unsmoothed.
double bleu(std::span<const Tokens> hypotheses, std::span<const Tokens> references);

struct EvalReport {
  double ter = 0.0;
  double bleu = 0.0;
  std::size_t n_examples = 0;
};

EvalReport evaluate_corpus(std::span<const Tokens> hypotheses, std::span<const Tokens> references);

void write_report_csv(std::ostream& out, const EvalReport& report);
void write_report_table(std::ostream& out, const EvalReport& report);

}  // namespace ape
