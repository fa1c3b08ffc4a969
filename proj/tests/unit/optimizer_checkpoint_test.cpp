#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "ape/checkpoint.hpp"
#include "ape/error.hpp"
#include "ape/optimizer.hpp"
#include "ape/rng.hpp"
#include "ape/synthetic.hpp"
#include "fixtures.hpp"

namespace ape {
namespace {

TEST(Schedule, WarmupThenInverseSqrt) {
  EXPECT_DOUBLE_EQ(inverse_sqrt_lr(1e-3, 100, 1), 1e-5);
  EXPECT_DOUBLE_EQ(inverse_sqrt_lr(1e-3, 100, 50), 5e-4);
  EXPECT_DOUBLE_EQ(inverse_sqrt_lr(1e-3, 100, 100), 1e-3);
  EXPECT_DOUBLE_EQ(inverse_sqrt_lr(1e-3, 100, 400), 5e-4);
  EXPECT_DOUBLE_EQ(inverse_sqrt_lr(1e-3, 0, 400), 1e-3);
  double prev = 0.0;
  for (std::size_t s = 1; s <= 100; ++s) {
    EXPECT_GT(inverse_sqrt_lr(1.0, 100, s), prev);
    prev = inverse_sqrt_lr(1.0, 100, s);
  }
}

TEST(AdamWConfig, Validation) {
  AdamWConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lr = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.lr = 1e-3;
  c.beta2 = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

class AdamWTest : public ::testing::Test {
 protected:
  AdamWTest()
      : corpus_(generate_synthetic_corpus(2, 1, NoiseProfile::ape())),
        vocab_(fixture::corpus_vocab(corpus_)),
        model_(fixture::tiny_config(vocab_), 1) {
    model_.round_to_float();
  }

  void fill_grads(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& [name, p] : model_.named_parameters()) {
      for (Eigen::Index j = 0; j < p->grad.size(); ++j) p->grad.data()[j] = rng.uniform(-1, 1);
    }
  }

  std::vector<ApeExample> corpus_;
  Vocab vocab_;
  Model model_;
};

TEST_F(AdamWTest, MatchesScalarRecurrence) {
  AdamWConfig cfg;
  cfg.lr = 1e-2;
  cfg.warmup = 3;
  cfg.weight_decay = 0.1;
  AdamW opt(cfg);

  // Written out per entry for three steps, in float32 like the stored state.
  struct Entry {
    float w, m, v;
    bool decay;
  };
  std::vector<Entry> ref;
  for (auto& [name, p] : model_.named_parameters()) {
    const bool decay = name.ends_with(".weight") || name.ends_with(".embed");
    for (Eigen::Index j = 0; j < p->value.size(); ++j) ref.push_back({static_cast<float>(p->value.data()[j]), 0.0f, 0.0f, decay});
  }
  for (int step = 1; step <= 3; ++step) {
    fill_grads(static_cast<std::uint64_t>(step));
    std::size_t k = 0;
    const double lr = step < 3 ? 1e-2 * step / 3.0 : 1e-2;
    for (auto& [name, p] : model_.named_parameters()) {
      for (Eigen::Index j = 0; j < p->grad.size(); ++j, ++k) {
        auto& e = ref[k];
        const double g = p->grad.data()[j];
        const double m = 0.9 * e.m + (1 - 0.9) * g;
        const double v = 0.98 * e.v + (1 - 0.98) * g * g;
        const double mhat = m / (1 - std::pow(0.9, step));
        const double vhat = v / (1 - std::pow(0.98, step));
        e.w = static_cast<float>(e.w - lr * (mhat / (std::sqrt(vhat) + 1e-8) + (e.decay ? 0.1 * e.w : 0.0)));
        e.m = static_cast<float>(m);
        e.v = static_cast<float>(v);
      }
    }
    opt.step(model_);
  }
  EXPECT_EQ(opt.steps(), 3u);
  std::size_t k = 0;
  for (auto& [name, p] : model_.named_parameters()) {
    for (Eigen::Index j = 0; j < p->value.size(); ++j, ++k) ASSERT_EQ(p->value.data()[j], ref[k].w) << name;
  }
}

TEST_F(AdamWTest, BiasesAndGainsDoNotDecay) {
  AdamWConfig cfg;
  cfg.weight_decay = 0.5;
  AdamW opt(cfg);
  const Model before = model_;
  model_.zero_grad();
  opt.step(model_);
  const auto a = before.named_parameters();
  const auto b = model_.named_parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool decays = a[i].first.ends_with(".weight") || a[i].first.ends_with(".embed");
    if (!decays) {
      EXPECT_EQ(a[i].second->value, b[i].second->value) << a[i].first;
    }
  }
}

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.config = {{"b", "2"}, {"a", "x y"}};
  c.vocab = {"<sep>", "hello"};
  c.records.push_back(TensorRecord{"w", 2, 3, {1, 2, 3, 4, 5, -0.5f}});
  c.records.push_back(TensorRecord{"empty", 0, 4, {}});
  return c;
}

std::string bytes_of(const Checkpoint& c) {
  std::ostringstream out;
  write_checkpoint(out, c);
  return out.str();
}

TEST(Checkpoint, ByteRoundTrip) {
  const std::string bytes = bytes_of(sample_checkpoint());
  EXPECT_EQ(bytes.substr(0, 4), "MTCK");
  EXPECT_EQ(bytes[4], 1);
  std::istringstream in(bytes);
  const Checkpoint back = read_checkpoint(in);
  EXPECT_EQ(back, sample_checkpoint());
  EXPECT_EQ(bytes_of(back), bytes);
}

TEST(Checkpoint, LittleEndianFloats) {
  Checkpoint c;
  c.records.push_back(TensorRecord{"x", 1, 1, {1.0f}});
  const std::string bytes = bytes_of(c);
  EXPECT_EQ(bytes.substr(bytes.size() - 4), std::string("\x00\x00\x80\x3f", 4));
}

TEST(Checkpoint, RejectsCorruptInput) {
  std::string bytes = bytes_of(sample_checkpoint());
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::istringstream a(bad_magic);
  EXPECT_THROW(read_checkpoint(a), DataError);

  std::string bad_version = bytes;
  bad_version[4] = 9;
  std::istringstream b(bad_version);
  EXPECT_THROW(read_checkpoint(b), DataError);

  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    std::istringstream c(bytes.substr(0, cut));
    EXPECT_THROW(read_checkpoint(c), DataError) << cut;
  }
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/x.mtck"), DataError);
}

TEST(Checkpoint, ModelRoundTripIsExact) {
  const auto corpus = generate_synthetic_corpus(5, 2, NoiseProfile::ape());
  const Vocab vocab = fixture::corpus_vocab(corpus);
  Model model(fixture::tiny_config(vocab), 3);
  model.round_to_float();
  const auto ckpt = model_checkpoint(model, vocab);
  const Model back = model_from(ckpt);
  EXPECT_EQ(back.config(), model.config());
  EXPECT_EQ(vocab_from(ckpt), vocab);
  const Ids ids = assemble_stage_input(corpus[0], Stage::FineTune, vocab).encoder_ids;
  EXPECT_EQ(back.encode(ids), model.encode(ids));
  EXPECT_EQ(bytes_of(model_checkpoint(back, vocab)), bytes_of(ckpt));

  Checkpoint missing = ckpt;
  missing.records.pop_back();
  EXPECT_THROW(model_from(missing), DataError);
  Checkpoint reshaped = ckpt;
  reshaped.records.front().rows += 1;
  EXPECT_THROW(model_from(reshaped), DataError);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "ape_ckpt_test.mtck";
  save_checkpoint(path.string(), sample_checkpoint());
  EXPECT_EQ(load_checkpoint(path.string()), sample_checkpoint());
  std::filesystem::remove(path);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1e-300, -2.5, 123456.789, 0.87560}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_THROW(parse_double("1.0x"), DataError);
}

}  // namespace
}  // namespace ape
