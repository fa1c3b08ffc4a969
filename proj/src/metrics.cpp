#include "ape/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "ape/error.hpp"

namespace ape {

namespace {

void check_corpus(std::span<const Tokens> hyps, std::span<const Tokens> refs) {
  if (hyps.size() != refs.size()) throw MetricError("hypothesis and reference counts differ");
  if (refs.empty()) throw MetricError("empty corpus");
  for (const auto& r : refs) {
    if (r.empty()) throw MetricError("empty reference");
  }
}

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[std::vector<std::string_view>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                        tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::size_t edit_distance(const Tokens& hyp, const Tokens& ref) {
  std::vector<std::size_t> row(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (hyp[i - 1] == ref[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[ref.size()];
}

double ter(std::span<const Tokens> hypotheses, std::span<const Tokens> references) {
  check_corpus(hypotheses, references);
  std::size_t edits = 0;
  std::size_t length = 0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    edits += edit_distance(hypotheses[i], references[i]);
    length += references[i].size();
  }
  return 100.0 * static_cast<double>(edits) / static_cast<double>(length);
}

double bleu(std::span<const Tokens> hypotheses, std::span<const Tokens> references) {
  check_corpus(hypotheses, references);
  std::array<double, 4> matched{};
  std::array<double, 4> possible{};
  double hyp_len = 0.0;
  double ref_len = 0.0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    hyp_len += static_cast<double>(hypotheses[i].size());
    ref_len += static_cast<double>(references[i].size());
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto h = ngrams(hypotheses[i], n);
      const auto r = ngrams(references[i], n);
      for (const auto& [gram, count] : h) {
        const auto it = r.find(gram);
        if (it != r.end()) matched[n - 1] += static_cast<double>(std::min(count, it->second));
        possible[n - 1] += static_cast<double>(count);
      }
    }
  }
  if (hyp_len == 0.0 || matched[0] == 0.0) return 0.0;
  double log_precision = std::log(matched[0] / possible[0]);
  for (std::size_t n = 1; n < 4; ++n) log_precision += std::log((matched[n] + 1.0) / (possible[n] + 1.0));
  const double bp = hyp_len < ref_len ? std::exp(1.0 - ref_len / hyp_len) : 1.0;
  return 100.0 * bp * std::exp(log_precision / 4.0);
}

EvalReport evaluate_corpus(std::span<const Tokens> hypotheses, std::span<const Tokens> references) {
  return {ter(hypotheses, references), bleu(hypotheses, references), references.size()};
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "ter,bleu,n_examples\n" << fixed(report.ter) << ',' << fixed(report.bleu) << ',' << report.n_examples << '\n';
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  out << "examples  " << report.n_examples << "\nTER       " << fixed(report.ter) << "\nBLEU      "
      << fixed(report.bleu) << '\n';
}

}  // namespace ape
