#include "ape/benchmark.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "ape/error.hpp"
#include "ape/rng.hpp"
#include "ape/synthetic.hpp"

namespace ape {

namespace {

StagePlan stage_plan(const BenchmarkConfig& c, Stage stage) {
  StagePlan p;
  p.stage = stage;
  switch (stage) {
    case Stage::Step1: p.epochs = c.step1_epochs; break;
    case Stage::Step2: p.epochs = c.step2_epochs; break;
    case Stage::Step3: p.epochs = c.step3_epochs; break;
    case Stage::FineTune: p.epochs = c.finetune_epochs; break;
  }
  const bool ft = stage == Stage::FineTune;
  p.batch_size = ft ? c.finetune_batch : c.pretrain_batch;
  p.lr = ft ? c.finetune_lr : c.pretrain_lr;
  return p;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

TrainConfig BenchmarkConfig::train_template() const {
  TrainConfig t;
  t.model = model;
  t.optimizer.warmup = warmup;
  t.number_filter = true;
  t.dwa.include_main = include_main;
  t.dwa.temperature = dwa_temperature;
  return t;
}

BenchmarkConfig parse_benchmark_config(const ConfigFile& cfg) {
  BenchmarkConfig c;
  auto size = [&](const char* key, std::size_t& field) {
    field = static_cast<std::size_t>(cfg.get_int(key, static_cast<long long>(field)));
  };
  c.data_seed = cfg.get_u64("bench.data_seed", c.data_seed);
  size("bench.step1_size", c.step1_size);
  size("bench.step2_size", c.step2_size);
  size("bench.step3_size", c.step3_size);
  size("bench.finetune_size", c.finetune_size);
  size("bench.eval_size", c.eval_size);
  size("bench.step1_epochs", c.step1_epochs);
  size("bench.step2_epochs", c.step2_epochs);
  size("bench.step3_epochs", c.step3_epochs);
  size("bench.finetune_epochs", c.finetune_epochs);
  size("bench.pretrain_batch", c.pretrain_batch);
  size("bench.finetune_batch", c.finetune_batch);
  size("bench.warmup", c.warmup);
  c.pretrain_lr = cfg.get_double("bench.pretrain_lr", c.pretrain_lr);
  c.finetune_lr = cfg.get_double("bench.finetune_lr", c.finetune_lr);
  c.include_main = cfg.get_bool("dwa.include_main", c.include_main);
  c.dwa_temperature = cfg.get_double("dwa.T", c.dwa_temperature);
  c.model.d_model = static_cast<int>(cfg.get_int("model.d_h", c.model.d_model));
  c.model.d_shared = static_cast<int>(cfg.get_int("model.d_s", c.model.d_shared));
  c.model.layers = static_cast<int>(cfg.get_int("model.layers", c.model.layers));
  c.model.heads = static_cast<int>(cfg.get_int("model.heads", c.model.heads));
  c.model.d_ff = static_cast<int>(cfg.get_int("model.d_ff", c.model.d_ff));
  cfg.check_all_used();
  if (c.finetune_size == 0 || c.eval_size == 0 || c.finetune_batch == 0 || c.pretrain_batch == 0) {
    throw ConfigError("benchmark sizes must be positive");
  }
  return c;
}

BenchmarkData make_benchmark_data(const BenchmarkConfig& c) {
  BenchmarkData d;
  d.vocab = Lexicon::standard().make_vocab();
  auto corpus = [&](std::uint64_t stream, std::size_t n, const NoiseProfile& profile) {
    return n == 0 ? std::vector<ApeExample>{}
                  : apply_number_filter(generate_synthetic_corpus(mix_seed(c.data_seed, stream), n, profile));
  };
  d.stage_corpus[Stage::Step1] = corpus(1, c.step1_size, NoiseProfile::news());
  d.stage_corpus[Stage::Step2] = corpus(2, c.step2_size, NoiseProfile::news());
  d.stage_corpus[Stage::Step3] = corpus(3, c.step3_size, NoiseProfile::mixed());
  d.stage_corpus[Stage::FineTune] = corpus(4, c.finetune_size, NoiseProfile::ape());
  d.eval = corpus(5, c.eval_size, NoiseProfile::ape());
  return d;
}

FineTuneMode vanilla_mode() {
  FineTuneMode m;
  m.tasks[index(Task::Pe)] = true;
  return m;
}

FineTuneMode mls_mode(bool dwa) {
  FineTuneMode m;
  m.tasks.fill(true);
  m.dwa = dwa;
  return m;
}

std::vector<Arm> suite_arms(const std::string& suite) {
  using enum Stage;
  if (suite == "cts") {
    return {{"full_cts", {Step1, Step2, Step3}, vanilla_mode()},
            {"wo_step2", {Step1, Step3}, vanilla_mode()},
            {"wo_step3", {Step1, Step2}, vanilla_mode()},
            {"finetune_only", {}, vanilla_mode()}};
  }
  const std::vector<Stage> full = {Step1, Step2, Step3};
  if (suite == "dwa") {
    return {{"mls_dwa", full, mls_mode(true)}, {"mls_no_dwa", full, mls_mode(false)}, {"vanilla", full, vanilla_mode()}};
  }
  if (suite == "mls") {
    std::vector<Arm> arms = {{"vanilla", full, vanilla_mode()}};
    const std::pair<const char*, std::vector<Task>> singles[] = {{"plus_pos", {Task::Pos}},
                                                                {"plus_ner", {Task::Ner}},
                                                                {"plus_mlm", {Task::Mlm}},
                                                                {"plus_kt", {Task::KtEnc, Task::KtDec}}};
    for (const auto& [name, tasks] : singles) {
      FineTuneMode m = vanilla_mode();
      for (auto t : tasks) m.tasks[index(t)] = true;
      arms.push_back({name, full, m});
    }
    arms.push_back({"mls_no_dwa", full, mls_mode(false)});
    arms.push_back({"mls_dwa", full, mls_mode(true)});
    return arms;
  }
  throw ConfigError("unknown suite: " + suite + " (expected cts, mls or dwa)");
}

BenchmarkRunner::BenchmarkRunner(BenchmarkConfig config, BenchmarkData data)
    : config_(std::move(config)), data_(std::move(data)) {}

const Model& BenchmarkRunner::pretrained(const std::vector<Stage>& stages, std::uint64_t seed) {
  const auto key = std::make_pair(seed, stages);
  if (const auto it = cache_.find(key); it != cache_.end()) return it->second;

  TrainConfig tc = config_.train_template();
  tc.seed = seed;
  TrainState state = initial_state(tc, data_.vocab);
  if (!stages.empty()) {
    const std::vector<Stage> prefix(stages.begin(), stages.end() - 1);
    state.model = pretrained(prefix, seed);
    const Stage stage = stages.back();
    state.stage_index = static_cast<std::size_t>(stage);
    const auto data = prepare_stage_data(data_.stage_corpus.at(stage), stage, data_.vocab);
    run_stage(state, stage_plan(config_, stage), data, tc);
  }
  return cache_.emplace(key, std::move(state.model)).first->second;
}

Model BenchmarkRunner::fine_tuned(const Arm& arm, std::uint64_t seed) {
  TrainConfig tc = config_.train_template();
  tc.seed = seed;
  tc.tasks = arm.mode.tasks;
  tc.dwa.enabled = arm.mode.dwa;
  TrainState state = initial_state(tc, data_.vocab);
  state.model = pretrained(arm.pretrain, seed);
  // Batch order depends on the stage, not on its position in the arm, so arms
  // differ only in their starting parameters and fine-tuning objective.
  state.stage_index = static_cast<std::size_t>(Stage::FineTune);
  const auto data = prepare_stage_data(data_.stage_corpus.at(Stage::FineTune), Stage::FineTune, data_.vocab);
  run_stage(state, stage_plan(config_, Stage::FineTune), data, tc);
  return std::move(state.model);
}

ArmResult BenchmarkRunner::run(const std::string& suite, const Arm& arm, std::uint64_t seed) {
  const Model model = fine_tuned(arm, seed);
  return {suite, arm.name, seed, evaluate_model(model, data_.vocab, data_.eval).report};
}

void write_ablation_csv(std::ostream& out, const std::vector<ArmResult>& results) {
  out << "suite,arm,seed,ter,bleu,n_examples\n";
  for (const auto& r : results) {
    out << r.suite << ',' << r.arm << ',' << r.seed << ',' << fixed(r.report.ter) << ',' << fixed(r.report.bleu)
        << ',' << r.report.n_examples << '\n';
  }
}

double median(std::vector<double> values) {
  if (values.empty()) throw MetricError("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace ape
