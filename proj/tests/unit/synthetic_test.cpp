#include <gtest/gtest.h>

#include <set>

#include "ape/corpus.hpp"
#include "ape/error.hpp"
#include "ape/synthetic.hpp"

namespace ape {
namespace {

// Plain O(nm) Levenshtein, kept separate from the metrics module.
std::size_t levenshtein(const Tokens& a, const Tokens& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
    }
  }
  return d[a.size()][b.size()];
}

NoiseProfile rate_profile(double rate) {
  NoiseProfile p = NoiseProfile::ape();
  p.mt_rate = rate;
  p.ext_rate = rate;
  return p;
}

TEST(Synthetic, DeterministicUnderSeed) {
  EXPECT_EQ(generate_synthetic_corpus(7, 100, rate_profile(0.2)), generate_synthetic_corpus(7, 100, rate_profile(0.2)));
  EXPECT_NE(generate_synthetic_corpus(7, 100, rate_profile(0.2)), generate_synthetic_corpus(8, 100, rate_profile(0.2)));
}

TEST(Synthetic, ZeroNoiseIsIdentity) {
  for (const auto& ex : generate_synthetic_corpus(3, 200, rate_profile(0.0))) {
    EXPECT_EQ(ex.mt, ex.pe);
    EXPECT_EQ(*ex.mt_ext, ex.pe);
  }
}

TEST(Synthetic, EditRateMatchesProfile) {
  double total = 0.0;
  const auto corpus = generate_synthetic_corpus(7, 1000, rate_profile(0.2));
  for (const auto& ex : corpus) {
    total += static_cast<double>(levenshtein(ex.mt, ex.pe)) / static_cast<double>(ex.pe.size());
  }
  EXPECT_NEAR(total / static_cast<double>(corpus.size()), 0.2, 0.05);
}

TEST(Synthetic, InvalidRatesThrow) {
  EXPECT_THROW(generate_synthetic_corpus(1, 10, rate_profile(-0.1)), ConfigError);
  EXPECT_THROW(generate_synthetic_corpus(1, 10, rate_profile(1.5)), ConfigError);
  EXPECT_THROW(generate_synthetic_corpus(1, 0, rate_profile(0.1)), ConfigError);
  NoiseProfile p = NoiseProfile::ape();
  p.number_mismatch_rate = 2.0;
  EXPECT_THROW(generate_synthetic_corpus(1, 10, p), ConfigError);
}

TEST(Synthetic, ExamplesAreValidAndSourceIsReversible) {
  for (const auto& ex : generate_synthetic_corpus(9, 500, NoiseProfile::ape())) {
    EXPECT_NO_THROW(validate(ex));
    EXPECT_EQ(source_to_target(ex.src), ex.pe);
    EXPECT_EQ(ex.src.size(), ex.pe.size());
  }
}

TEST(Synthetic, SourceAndTargetWordsAreDisjointExceptShared) {
  const auto& lex = Lexicon::standard();
  std::set<std::string> targets;
  std::set<std::string> sources;
  for (const auto& e : lex.entries()) {
    targets.insert(e.target);
    sources.insert(e.source);
    EXPECT_EQ(lex.to_target(e.source), e.target);
    EXPECT_EQ(lex.to_source(e.target), e.source);
    const bool shared = e.pos == PosTag::Num || e.pos == PosTag::Propn;
    EXPECT_EQ(e.source == e.target, shared) << e.target;
  }
  EXPECT_EQ(targets.size(), lex.entries().size());
  EXPECT_EQ(sources.size(), lex.entries().size());
}

TEST(Synthetic, NewsProfileBreaksSomeNumbers) {
  const auto corpus = generate_synthetic_corpus(4, 2000, NoiseProfile::news());
  const auto kept = apply_number_filter(corpus);
  EXPECT_LT(kept.size(), corpus.size());
  EXPECT_GT(kept.size(), corpus.size() * 9 / 10);
  for (const auto& ex : corpus) EXPECT_FALSE(ex.has_mt_ext());
}

TEST(Synthetic, ApeProfileKeepsNumbers) {
  const auto corpus = generate_synthetic_corpus(4, 500, NoiseProfile::ape());
  EXPECT_EQ(apply_number_filter(corpus).size(), corpus.size());
}

TEST(Synthetic, NamedProfiles) {
  EXPECT_EQ(NoiseProfile::named("news").domain, Domain::News);
  EXPECT_EQ(NoiseProfile::named("ape").domain, Domain::Ape);
  EXPECT_THROW(NoiseProfile::named("web"), ConfigError);
}

}  // namespace
}  // namespace ape
