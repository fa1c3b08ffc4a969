#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "ape/benchmark.hpp"
#include "ape/checkpoint.hpp"
#include "ape/error.hpp"
#include "ape/synthetic.hpp"
#include "ape/trainer.hpp"
#include "fixtures.hpp"

namespace ape {
namespace {

std::string bytes_of(const Checkpoint& c) {
  std::ostringstream out;
  write_checkpoint(out, c);
  return out.str();
}

// Tiny FineTune-only setup over a fixed synthetic corpus.
class TrainerTest : public ::testing::Test {
 protected:
  TrainerTest() : corpus_(generate_synthetic_corpus(21, 12, NoiseProfile::ape())), vocab_(fixture::corpus_vocab(corpus_)) {
    config_.model = fixture::tiny_config(vocab_);
    config_.optimizer.warmup = 4;
    config_.seed = 5;
    StagePlan ft;
    ft.stage = Stage::FineTune;
    ft.epochs = 3;
    ft.batch_size = 4;
    ft.lr = 3e-3;
    config_.plan.stages = {ft};
    data_ = prepare_stage_data(corpus_, Stage::FineTune, vocab_);
  }

  TrainState fresh() const { return initial_state(config_, vocab_); }

  std::vector<ApeExample> corpus_;
  Vocab vocab_;
  TrainConfig config_;
  std::vector<PreparedExample> data_;
};

TEST_F(TrainerTest, StageTasks) {
  EXPECT_EQ(stage_tasks(Stage::Step2, config_), (std::array<bool, kNumTasks>{true}));
  EXPECT_EQ(stage_tasks(Stage::FineTune, config_), fixture::all_tasks());
  config_.tasks[index(Task::Ner)] = false;
  EXPECT_FALSE(stage_tasks(Stage::FineTune, config_)[index(Task::Ner)]);
  EXPECT_EQ(weighted_tasks(fixture::all_tasks(), true).size(), 6u);
  EXPECT_EQ(weighted_tasks(fixture::all_tasks(), false).size(), 5u);
}

TEST_F(TrainerTest, UnitWeightsGiveUnweightedMean) {
  fixture::Batch batch(corpus_, vocab_, 3);
  Model model(config_.model, 2);
  const auto obj = Objective::joint(fixture::all_tasks(), std::vector<double>(kNumTasks, 1.0), true, batch.losses());
  const auto r = model.forward_backward(batch.items(), obj, false);
  double mean = 0.0;
  for (double v : r.mean) mean += v / kNumTasks;
  EXPECT_NEAR(r.joint, mean, 1e-12);
}

TEST_F(TrainerTest, PeOnlyJointIsPlainSeq2Seq) {
  fixture::Batch batch(corpus_, vocab_, 3);
  std::array<bool, kNumTasks> pe{};
  pe[index(Task::Pe)] = true;
  Model a(config_.model, 2);
  Model b = a;
  a.zero_grad();
  b.zero_grad();
  const auto ra = a.forward_backward(batch.items(), Objective::joint(pe, std::vector<double>(kNumTasks, 1.0), true, {}),
                                     true);
  const auto rb = b.forward_backward(batch.items(), Objective::pe_only(), true);
  EXPECT_EQ(ra.joint, rb.joint);
  EXPECT_EQ(fixture::max_grad_gap(a, b), 0.0);
}

TEST_F(TrainerTest, DwaUpdatesOncePerEpoch) {
  auto state = fresh();
  const auto stats = run_stage(state, config_.plan.stages[0], data_, config_);
  ASSERT_EQ(stats.size(), 3u);
  ASSERT_EQ(state.dwa.history().size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    for (std::size_t k = 0; k < kNumTasks; ++k) EXPECT_EQ(state.dwa.history()[e][k], stats[e].mean[k]);
  }
  // Epochs 0 and 1 train with unit weights, epoch 2 with weights from epochs 0 and 1.
  for (double l : stats[0].lambda) EXPECT_EQ(l, 1.0);
  for (double l : stats[1].lambda) EXPECT_EQ(l, 1.0);
  DwaState expect(kNumTasks, 2.0);
  expect.record_epoch(state.dwa.history()[0]);
  expect.record_epoch(state.dwa.history()[1]);
  expect.update_weights();
  for (std::size_t k = 0; k < kNumTasks; ++k) EXPECT_EQ(stats[2].lambda[k], expect.weight_for(k));
  double sum = 0.0;
  for (double l : stats[2].lambda) sum += l;
  EXPECT_NEAR(sum, 6.0, 1e-9);
}

TEST_F(TrainerTest, DisabledDwaKeepsUnitWeights) {
  config_.dwa.enabled = false;
  auto state = fresh();
  for (const auto& s : run_stage(state, config_.plan.stages[0], data_, config_)) {
    for (double l : s.lambda) EXPECT_EQ(l, 1.0);
  }
  EXPECT_TRUE(state.dwa.history().empty());
}

TEST_F(TrainerTest, LossFallsOnSmallCorpus) {
  const auto small = prepare_stage_data(std::vector<ApeExample>(corpus_.begin(), corpus_.begin() + 8),
                                        Stage::FineTune, vocab_);
  auto plan = config_.plan.stages[0];
  plan.epochs = 3;
  auto state = fresh();
  const auto stats = run_stage(state, plan, small, config_);
  EXPECT_LE(stats[1].mean[index(Task::Pe)], stats[0].mean[index(Task::Pe)]);
  EXPECT_LE(stats[2].mean[index(Task::Pe)], stats[1].mean[index(Task::Pe)]);
}

TEST_F(TrainerTest, MissingSegments) {
  ApeExample no_ext = corpus_[0];
  no_ext.mt_ext.reset();
  EXPECT_THROW(prepare_stage_data({no_ext}, Stage::Step3, vocab_), MissingSegment);
  EXPECT_THROW(prepare_stage_data({no_ext}, Stage::FineTune, vocab_), MissingSegment);
  EXPECT_NO_THROW(prepare_stage_data({no_ext}, Stage::Step2, vocab_));
  auto state = fresh();
  EXPECT_THROW(run_stage(state, config_.plan.stages[0], {}, config_), EmptyInput);
}

TEST_F(TrainerTest, NonFiniteLossThrowsBeforeTheUpdate) {
  auto state = fresh();
  fixture::Batch batch(corpus_, vocab_, 3);
  auto params = state.model.named_parameters();
  params.front().second->value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  const Model before = state.model;
  EXPECT_THROW(joint_step(state, batch.items(), Objective::pe_only()), TrainError);
  EXPECT_EQ(state.optimizer.steps(), 0u);
  const auto a = before.named_parameters();
  const auto b = state.model.named_parameters();
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_EQ(a[i].second->value, b[i].second->value);
}

TEST_F(TrainerTest, ResumeIsBitExact) {
  config_.plan.stages[0].epochs = 4;
  auto straight = fresh();
  run_stage(straight, config_.plan.stages[0], data_, config_);

  auto first = fresh();
  auto half = config_.plan.stages[0];
  half.epochs = 2;
  run_stage(first, half, data_, config_);
  std::istringstream in(bytes_of(state_checkpoint(first, vocab_)));
  auto resumed = state_from(read_checkpoint(in));
  EXPECT_EQ(resumed.epoch, 2u);
  EXPECT_EQ(resumed.dwa, first.dwa);
  run_stage(resumed, config_.plan.stages[0], data_, config_);

  EXPECT_EQ(bytes_of(state_checkpoint(resumed, vocab_)), bytes_of(state_checkpoint(straight, vocab_)));
}

TEST_F(TrainerTest, SameSeedSameBytes) {
  auto a = fresh();
  auto b = fresh();
  run_stage(a, config_.plan.stages[0], data_, config_);
  run_stage(b, config_.plan.stages[0], data_, config_);
  EXPECT_EQ(bytes_of(state_checkpoint(a, vocab_)), bytes_of(state_checkpoint(b, vocab_)));
  config_.seed = 6;
  auto c = fresh();
  run_stage(c, config_.plan.stages[0], data_, config_);
  EXPECT_NE(bytes_of(state_checkpoint(a, vocab_)), bytes_of(state_checkpoint(c, vocab_)));
}

TEST_F(TrainerTest, StageHandOffCarriesParameters) {
  config_.number_filter = false;
  StagePlan s1;
  s1.stage = Stage::Step1;
  s1.corpus.profile = "news";
  s1.corpus.size = 10;
  s1.corpus.seed = 21;
  s1.epochs = 1;
  s1.batch_size = 5;
  s1.lr = 2e-3;
  StagePlan ft = config_.plan.stages[0];
  ft.corpus.size = 12;
  ft.corpus.seed = 21;
  ft.epochs = 1;
  config_.plan.stages = {s1, ft};

  const Vocab vocab = Lexicon::standard().make_vocab();
  config_.model.vocab_size = 0;
  std::vector<std::string> ends;
  auto state = initial_state(config_, vocab);
  run_curriculum(state, config_, vocab, {},
                 [&](std::size_t, const TrainState& s) { ends.push_back(bytes_of(model_checkpoint(s.model, vocab))); });
  ASSERT_EQ(ends.size(), 2u);

  // Replaying the fine-tuning stage from the saved stage-1 parameters lands
  // on the same final model.
  std::istringstream in(ends[0]);
  TrainState replay = initial_state(config_, vocab);
  replay.model = model_from(read_checkpoint(in));
  replay.stage_index = 1;
  run_stage(replay, ft, prepare_stage_data(ft.corpus.load(), Stage::FineTune, vocab), config_);
  EXPECT_EQ(bytes_of(model_checkpoint(replay.model, vocab)), ends[1]);
  EXPECT_NE(ends[0], ends[1]);
}

TEST(Benchmark, ReportIsDeterministic) {
  BenchmarkConfig c;
  c.step1_size = c.step2_size = c.step3_size = 24;
  c.finetune_size = 12;
  c.eval_size = 6;
  c.step1_epochs = c.step2_epochs = c.step3_epochs = 1;
  c.finetune_epochs = 2;
  c.model = fixture::tiny_config(Vocab());
  auto run = [&] {
    BenchmarkRunner r(c, make_benchmark_data(c));
    std::vector<ArmResult> results;
    for (const auto& arm : suite_arms("dwa")) results.push_back(r.run("dwa", arm, 42));
    std::ostringstream out;
    write_ablation_csv(out, results);
    return out.str();
  };
  const std::string a = run();
  EXPECT_EQ(a, run());
  std::istringstream in(a);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "suite,arm,seed,ter,bleu,n_examples");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(line.rfind("dwa,", 0), 0u);
    EXPECT_NE(line.find(",42,"), std::string::npos);
  }
  EXPECT_EQ(rows, 3u);
}

}  // namespace
}  // namespace ape
