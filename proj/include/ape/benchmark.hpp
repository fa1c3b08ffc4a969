#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ape/trainer.hpp"

namespace ape {

// The standard synthetic benchmark: large news-like corpora for Steps 1-2,
// a medium mixed corpus with external MT for Step 3, a small APE corpus for
// fine-tuning and a held-out APE corpus for evaluation. Corpora are fixed by
// data_seed; the run seed only drives initialization and batch order.
struct BenchmarkConfig {
  std::uint64_t data_seed = 42;
  std::size_t step1_size = 2000;
  std::size_t step2_size = 2000;
  std::size_t step3_size = 1000;
  std::size_t finetune_size = 200;
  std::size_t eval_size = 500;

  std::size_t step1_epochs = 2;
  std::size_t step2_epochs = 2;
  std::size_t step3_epochs = 2;
  std::size_t finetune_epochs = 20;
  std::size_t pretrain_batch = 32;
  std::size_t finetune_batch = 16;
  double pretrain_lr = 2e-3;
  double finetune_lr = 1e-3;
  std::size_t warmup = 100;
  bool include_main = true;
  double dwa_temperature = 2.0;

  ModelConfig model = default_model();  // vocabulary sizes come from the lexicon
  TrainConfig train_template() const;

  static ModelConfig default_model() {
    ModelConfig m;
    m.d_model = 32;
    m.d_shared = 32;
    m.d_ff = 64;
    return m;
  }
};

// Reads bench.* keys over the defaults; unknown keys are errors.
BenchmarkConfig parse_benchmark_config(const ConfigFile& cfg);

struct BenchmarkData {
  Vocab vocab;
  std::map<Stage, std::vector<ApeExample>> stage_corpus;
  std::vector<ApeExample> eval;
};

BenchmarkData make_benchmark_data(const BenchmarkConfig& config);

// How the fine-tuning stage trains.
struct FineTuneMode {
  std::array<bool, kNumTasks> tasks{};  // Pe is forced on
  bool dwa = false;
};

FineTuneMode vanilla_mode();
FineTuneMode mls_mode(bool dwa);

struct Arm {
  std::string name;
  std::vector<Stage> pretrain;  // curriculum stages before fine-tuning
  FineTuneMode mode;
};

// Arms of the named suite: cts, mls or dwa. Throws ConfigError otherwise.
std::vector<Arm> suite_arms(const std::string& suite);

struct ArmResult {
  std::string suite;
  std::string arm;
  std::uint64_t seed = 0;
  EvalReport report;
};

// Runs arms for one seed. Models trained on a shared stage prefix are reused
// (training is deterministic, so reuse does not change any result).
class BenchmarkRunner {
 public:
  BenchmarkRunner(BenchmarkConfig config, BenchmarkData data);

  const BenchmarkConfig& config() const noexcept { return config_; }
  const BenchmarkData& data() const noexcept { return data_; }

  // Model after training `stages` from the seed's initialization.
  const Model& pretrained(const std::vector<Stage>& stages, std::uint64_t seed);
  Model fine_tuned(const Arm& arm, std::uint64_t seed);
  ArmResult run(const std::string& suite, const Arm& arm, std::uint64_t seed);

 private:
  BenchmarkConfig config_;
  BenchmarkData data_;
  std::map<std::pair<std::uint64_t, std::vector<Stage>>, Model> cache_;
};

void write_ablation_csv(std::ostream& out, const std::vector<ArmResult>& results);

double median(std::vector<double> values);

}  // namespace ape
