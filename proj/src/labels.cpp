#include "ape/labels.hpp"

#include <algorithm>
#include <cctype>
#include <ostream>

#include "ape/error.hpp"
#include "ape/rng.hpp"

namespace ape {

namespace {

bool is_digit_run(const std::string& t) {
  return !t.empty() && std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); });
}

template <typename T, typename F>
std::string join_mapped(const std::vector<T>& v, F f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += f(v[i]);
  }
  return out;
}

}  // namespace

std::vector<int> tag_pos(const Tokens& tokens) {
  const auto& lex = Lexicon::standard();
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    PosTag tag = lex.pos_of(t);
    if (tag == PosTag::X && is_digit_run(t)) tag = PosTag::Num;
    out.push_back(static_cast<int>(tag));
  }
  return out;
}

std::vector<int> tag_ner(const Tokens& tokens) {
  const auto& lex = Lexicon::standard();
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(static_cast<int>(lex.ner_of(t)));
  return out;
}

std::size_t mlm_mask_count(std::size_t length) { return (length * kMlmPercent + 50) / 100; }

MlmMask mask_mlm(const Ids& encoder_ids, std::uint64_t seed) {
  if (encoder_ids.empty()) throw EmptyInput("cannot mask an empty input");
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < encoder_ids.size(); ++i) {
    if (!Vocab::is_reserved(encoder_ids[i])) candidates.push_back(i);
  }
  const std::size_t k = std::min(mlm_mask_count(encoder_ids.size()), candidates.size());

  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(candidates[i], candidates[i + rng.uniform_index(candidates.size() - i)]);
  }
  candidates.resize(k);
  std::sort(candidates.begin(), candidates.end());

  MlmMask m;
  m.input_ids = encoder_ids;
  m.positions = std::move(candidates);
  for (auto p : m.positions) {
    m.target_ids.push_back(encoder_ids[p]);
    m.input_ids[p] = Vocab::kMask;
  }
  return m;
}

TaskLabels build_task_labels(const ApeExample& example) {
  const auto tokens = encoder_tokens(example, Stage::FineTune);
  TaskLabels l;
  l.pos = tag_pos(tokens);
  l.ner = tag_ner(tokens);
  l.kt_enc = build_encoder_kt(example);
  l.kt_dec = build_decoder_kt(example.mt, example.pe);
  return l;
}

ClassCounts count_classes(std::span<const TaskLabels> labels) {
  ClassCounts c;
  for (const auto& l : labels) {
    for (int t : l.pos) ++c.pos[static_cast<std::size_t>(t)];
    for (int t : l.ner) ++c.ner[static_cast<std::size_t>(t)];
    for (auto t : l.kt_enc) ++c.kt_enc[static_cast<std::size_t>(t)];
    for (auto t : l.kt_dec) ++c.kt_dec[static_cast<std::size_t>(t)];
  }
  return c;
}

double imbalance_ratio(std::span<const std::size_t> counts) {
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    lo = lo == 0 ? c : std::min(lo, c);
    hi = std::max(hi, c);
  }
  return lo == 0 ? 1.0 : static_cast<double>(hi) / static_cast<double>(lo);
}

void write_label_file(std::ostream& out, const std::vector<ApeExample>& corpus, const Vocab& vocab,
                      std::uint64_t mask_seed) {
  out << "# src\tmt\tpe\tmt_ext\tpos\tner\tmlm\tkt_enc\tkt_dec\n";
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& ex = corpus[i];
    const Stage stage = ex.has_mt_ext() ? Stage::FineTune : Stage::Step2;
    const auto tokens = encoder_tokens(ex, stage);
    const auto pos = tag_pos(tokens);
    const auto ner = tag_ner(tokens);
    const auto mask = mask_mlm(to_ids(tokens, vocab), mix_seed(mask_seed, i));

    out << join_tokens(ex.src) << '\t' << join_tokens(ex.mt) << '\t' << join_tokens(ex.pe) << '\t'
        << (ex.mt_ext ? join_tokens(*ex.mt_ext) : std::string()) << '\t'
        << join_mapped(pos, [](int t) { return std::string(to_string(static_cast<PosTag>(t))); }) << '\t'
        << join_mapped(ner, [](int t) { return std::string(to_string(static_cast<NerTag>(t))); }) << '\t'
        << join_mapped(mask.positions, [](std::size_t p) { return std::to_string(p); }) << '\t';
    if (ex.has_mt_ext()) {
      out << join_mapped(build_encoder_kt(ex), [](KtTag t) { return std::string(1, to_char(t)); });
    }
    out << '\t' << join_mapped(build_decoder_kt(ex.mt, ex.pe), [](KtTag t) { return std::string(1, to_char(t)); })
        << '\n';
  }
}

}  // namespace ape
