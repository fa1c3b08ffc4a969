#include "ape/align.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "ape/error.hpp"

namespace ape {

namespace {

std::vector<std::string> trigrams(std::string_view word) {
  std::string padded;
  padded.reserve(word.size() + 2);
  padded += '#';
  padded += word;
  padded += '#';
  std::vector<std::string> out;
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) out.push_back(padded.substr(i, 3));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Alignment::Alignment(std::size_t left_len, std::size_t right_len)
    : left_to_right_(left_len), right_to_left_(right_len) {}

void Alignment::add(std::size_t left, std::size_t right) {
  if (left >= left_len() || right >= right_len()) throw std::invalid_argument("alignment index out of range");
  if (left_to_right_[left] || right_to_left_[right]) throw std::invalid_argument("index already aligned");
  left_to_right_[left] = right;
  right_to_left_[right] = left;
  auto pos = std::lower_bound(pairs_.begin(), pairs_.end(), Pair{left, right});
  pairs_.insert(pos, Pair{left, right});
}

std::optional<std::size_t> Alignment::right_of(std::size_t left) const {
  return left < left_len() ? left_to_right_[left] : std::nullopt;
}

std::optional<std::size_t> Alignment::left_of(std::size_t right) const {
  return right < right_len() ? right_to_left_[right] : std::nullopt;
}

double trigram_dice(std::string_view a, std::string_view b) {
  const auto ta = trigrams(a);
  const auto tb = trigrams(b);
  if (ta.empty() && tb.empty()) return 0.0;
  std::vector<std::string> common;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(common));
  return 2.0 * static_cast<double>(common.size()) / static_cast<double>(ta.size() + tb.size());
}

Alignment align(const Tokens& left, const Tokens& right) {
  Alignment out(left.size(), right.size());

  for (std::size_t i = 0; i < left.size(); ++i) {
    for (std::size_t j = 0; j < right.size(); ++j) {
      if (!out.left_of(j) && left[i] == right[j]) {
        out.add(i, j);
        break;
      }
    }
  }

  // Dice scores of the pairs left free by the exact pass.
  std::vector<std::vector<double>> score(left.size(), std::vector<double>(right.size(), 0.0));
  for (std::size_t i = 0; i < left.size(); ++i) {
    if (out.right_of(i)) continue;
    for (std::size_t j = 0; j < right.size(); ++j) {
      if (!out.left_of(j)) score[i][j] = trigram_dice(left[i], right[j]);
    }
  }

  while (true) {
    double best = kDiceThreshold;
    std::optional<std::pair<std::size_t, std::size_t>> pick;
    for (std::size_t i = 0; i < left.size(); ++i) {
      if (out.right_of(i)) continue;
      for (std::size_t j = 0; j < right.size(); ++j) {
        if (out.left_of(j)) continue;
        if (score[i][j] > best) {
          best = score[i][j];
          pick = {i, j};
        }
      }
    }
    if (!pick) break;
    out.add(pick->first, pick->second);
  }
  return out;
}

char to_char(KtTag tag) { return tag == KtTag::Keep ? 'K' : 'T'; }

KtLabels label_mt_against_pe(const Tokens& mt, const Tokens& pe) {
  if (mt.empty() || pe.empty()) throw EmptyInput("label_mt_against_pe needs non-empty sequences");
  const auto a = align(mt, pe);
  KtLabels labels(mt.size(), KtTag::Translate);
  for (const auto& [j, i] : a.pairs()) {
    if (mt[j] == pe[i]) labels[j] = KtTag::Keep;
  }
  return labels;
}

KtLabels project_labels_to_src(const Tokens& src, const Tokens& mt, const KtLabels& mt_labels) {
  if (mt_labels.size() != mt.size()) throw LabelError("mt label count does not match mt length");
  const auto a = align(src, mt);
  KtLabels labels(src.size(), KtTag::Translate);
  for (const auto& [i, j] : a.pairs()) labels[i] = mt_labels[j];
  return labels;
}

KtLabels build_encoder_kt(const ApeExample& example) {
  if (!example.has_mt()) throw MissingSegment("encoder labels need mt");
  if (!example.has_mt_ext()) throw MissingSegment("encoder labels need mt_ext");
  const auto mt_labels = label_mt_against_pe(example.mt, example.pe);
  const auto src_labels = project_labels_to_src(example.src, example.mt, mt_labels);
  const auto ext_labels = label_mt_against_pe(*example.mt_ext, example.pe);

  KtLabels out;
  out.reserve(src_labels.size() + mt_labels.size() + ext_labels.size() + 2);
  out.insert(out.end(), src_labels.begin(), src_labels.end());
  out.push_back(KtTag::Keep);
  out.insert(out.end(), mt_labels.begin(), mt_labels.end());
  out.push_back(KtTag::Keep);
  out.insert(out.end(), ext_labels.begin(), ext_labels.end());
  return out;
}

KtLabels build_decoder_kt(const Tokens& mt, const Tokens& pe) {
  if (mt.empty() || pe.empty()) throw EmptyInput("build_decoder_kt needs non-empty sequences");
  const auto a = align(mt, pe);
  KtLabels labels(pe.size(), KtTag::Translate);
  for (const auto& [j, i] : a.pairs()) {
    if (mt[j] == pe[i]) labels[i] = KtTag::Keep;
  }
  return labels;
}

}  // namespace ape
