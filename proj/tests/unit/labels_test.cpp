#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "ape/error.hpp"
#include "ape/labels.hpp"
#include "ape/synthetic.hpp"

namespace ape {
namespace {

TEST(Tagging, LexiconLookup) {
  const auto& lex = Lexicon::standard();
  const auto& noun = lex.entries()[lex.words(PosTag::Noun).front()];
  const auto& person = lex.entries()[lex.names(NerTag::Per).front()];
  const Tokens tokens = {noun.target, noun.source, "1234", "<sep>", "zzz", person.target};
  EXPECT_EQ(tag_pos(tokens), (std::vector<int>{static_cast<int>(PosTag::Noun), static_cast<int>(PosTag::Noun),
                                               static_cast<int>(PosTag::Num), 0, 0, static_cast<int>(PosTag::Propn)}));
  EXPECT_EQ(tag_ner(tokens), (std::vector<int>{0, 0, 0, 0, 0, static_cast<int>(NerTag::Per)}));
}

TEST(Tagging, ClosedTagSets) {
  EXPECT_GE(kNumPosTags, 6);
  EXPECT_GE(kNumNerTags, 3);
  std::set<int> pos;
  std::set<int> ner;
  for (const auto& profile : {NoiseProfile::ape(), NoiseProfile::news()}) {
    for (const auto& ex : generate_synthetic_corpus(1, 300, profile)) {
      for (int t : tag_pos(ex.pe)) pos.insert(t);
      for (int t : tag_ner(ex.pe)) ner.insert(t);
    }
  }
  EXPECT_EQ(pos.size(), static_cast<std::size_t>(kNumPosTags - 1));  // X never occurs in pe
  EXPECT_EQ(ner.size(), static_cast<std::size_t>(kNumNerTags));
}

TEST(MlmMask, CountIsRoundedFifteenPercent) {
  EXPECT_EQ(mlm_mask_count(20), 3u);
  EXPECT_EQ(mlm_mask_count(1), 0u);
  EXPECT_EQ(mlm_mask_count(10), 2u);  // 1.5 rounds up
  EXPECT_EQ(mlm_mask_count(3), 0u);   // 0.45
  EXPECT_EQ(mlm_mask_count(4), 1u);   // 0.6
  for (std::size_t n = 0; n < 500; ++n) {
    EXPECT_EQ(mlm_mask_count(n), static_cast<std::size_t>(std::floor(0.15 * static_cast<double>(n) + 0.5 + 1e-9)));
  }
}

TEST(MlmMask, TwentyTokensMaskThree) {
  Ids ids;
  for (int i = 0; i < 20; ++i) ids.push_back(10 + i);
  const auto m = mask_mlm(ids, 5);
  ASSERT_EQ(m.positions.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(m.input_ids[m.positions[k]], Vocab::kMask);
    EXPECT_EQ(m.target_ids[k], ids[m.positions[k]]);
  }
  EXPECT_TRUE(std::is_sorted(m.positions.begin(), m.positions.end()));
}

TEST(MlmMask, SingleTokenMasksNothing) {
  const auto m = mask_mlm({42}, 1);
  EXPECT_TRUE(m.positions.empty());
  EXPECT_EQ(m.input_ids, (Ids{42}));
}

TEST(MlmMask, DeterministicAndSeedDependent) {
  Ids ids;
  for (int i = 0; i < 40; ++i) ids.push_back(6 + i);
  EXPECT_EQ(mask_mlm(ids, 9).positions, mask_mlm(ids, 9).positions);
  bool differs = false;
  for (std::uint64_t s = 0; s < 10 && !differs; ++s) differs = mask_mlm(ids, s).positions != mask_mlm(ids, 9).positions;
  EXPECT_TRUE(differs);
}

TEST(MlmMask, NeverMasksReservedAndLeavesRestIntact) {
  const Ids ids = {6, 7, Vocab::kSep, 8, 9, Vocab::kSep, 10, 11, 12, 13, 14, 15, 16, 17};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto m = mask_mlm(ids, seed);
    EXPECT_EQ(m.positions.size(), mlm_mask_count(ids.size()));
    std::set<std::size_t> masked(m.positions.begin(), m.positions.end());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (masked.count(i)) {
        EXPECT_FALSE(Vocab::is_reserved(ids[i]));
      } else {
        EXPECT_EQ(m.input_ids[i], ids[i]);
      }
    }
  }
}

TEST(MlmMask, EmptyInputThrows) { EXPECT_THROW(mask_mlm({}, 1), EmptyInput); }

TEST(TaskLabels, LengthsMatchSequences) {
  for (const auto& ex : generate_synthetic_corpus(3, 100, NoiseProfile::ape())) {
    const auto l = build_task_labels(ex);
    const std::size_t n = ex.src.size() + ex.mt.size() + ex.mt_ext->size() + 2;
    EXPECT_EQ(l.pos.size(), n);
    EXPECT_EQ(l.ner.size(), n);
    EXPECT_EQ(l.kt_enc.size(), n);
    EXPECT_EQ(l.kt_dec.size(), ex.pe.size());
  }
}

TEST(ClassCounts, CountsAndImbalance) {
  std::vector<TaskLabels> labels;
  for (const auto& ex : generate_synthetic_corpus(3, 200, NoiseProfile::ape())) labels.push_back(build_task_labels(ex));
  const auto c = count_classes(labels);
  std::size_t total = 0;
  for (const auto& l : labels) total += l.kt_enc.size();
  EXPECT_EQ(c.kt_enc[0] + c.kt_enc[1], total);
  EXPECT_GT(c.kt_enc[0], c.kt_enc[1]);
  EXPECT_GT(imbalance_ratio(c.ner), 1.0);

  const std::vector<std::size_t> counts = {2160, 0, 1};
  EXPECT_DOUBLE_EQ(imbalance_ratio(counts), 2160.0);
  const std::vector<std::size_t> one = {0, 7};
  EXPECT_DOUBLE_EQ(imbalance_ratio(one), 1.0);
}

TEST(LabelFile, HeaderAndColumns) {
  const auto corpus = generate_synthetic_corpus(2, 5, NoiseProfile::ape());
  std::ostringstream out;
  write_label_file(out, corpus, Lexicon::standard().make_vocab(), 7);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# src\tmt\tpe\tmt_ext\tpos\tner\tmlm\tkt_enc\tkt_dec");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 8);
  }
  EXPECT_EQ(rows, corpus.size());
}

}  // namespace
}  // namespace ape
