#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ape/checkpoint.hpp"
#include "ape/config.hpp"
#include "ape/corpus.hpp"
#include "ape/dwa.hpp"
#include "ape/labels.hpp"
#include "ape/metrics.hpp"
#include "ape/model.hpp"
#include "ape/optimizer.hpp"

namespace ape {

// Either a corpus file or a synthetic corpus drawn from the generator.
struct CorpusSource {
  std::string path;
  std::string profile = "ape";
  std::size_t size = 0;
  std::uint64_t seed = 0;

  std::vector<ApeExample> load() const;
};

struct StagePlan {
  Stage stage = Stage::FineTune;
  CorpusSource corpus;
  std::size_t epochs = 1;
  std::size_t batch_size = 16;
  double lr = 1e-4;
};

struct CurriculumPlan {
  std::vector<StagePlan> stages;

  // Stages must be strictly increasing and end with FineTune.
  void validate() const;
};

struct DwaOptions {
  bool enabled = true;
  double temperature = 2.0;
  bool include_main = true;
};

struct TrainConfig {
  ModelConfig model;  // vocabulary sizes are filled in from the vocabulary
  AdamWConfig optimizer;
  DwaOptions dwa;
  double gamma = 2.0;
  // Tasks trained during FineTune; Pe is always on.
  std::array<bool, kNumTasks> tasks{true, true, true, true, true, true};
  bool number_filter = true;
  std::uint64_t seed = 1;
  CurriculumPlan plan;
  std::optional<CorpusSource> eval;
};

// Reads the documented keys (see README) and rejects unknown ones.
TrainConfig parse_train_config(const ConfigFile& cfg);

struct PreparedExample {
  StageInput input;
  std::optional<TaskLabels> labels;  // FineTune only
};

std::vector<PreparedExample> prepare_stage_data(const std::vector<ApeExample>& corpus, Stage stage,
                                                const Vocab& vocab);

struct TrainState {
  Model model;
  AdamW optimizer;
  DwaState dwa;
  std::uint64_t seed = 0;
  std::size_t stage_index = 0;  // position in the plan
  std::size_t epoch = 0;        // epochs completed in the current stage
};

TrainState initial_state(const TrainConfig& config, const Vocab& vocab);

struct EpochStats {
  Stage stage = Stage::FineTune;
  std::size_t epoch = 0;
  std::array<double, kNumTasks> mean{};  // per-position mean loss of every active task
  std::array<double, kNumTasks> lambda{};
  double joint = 0.0;  // mean of the batch objectives
};

// Tasks active in a stage: Pe alone before FineTune.
std::array<bool, kNumTasks> stage_tasks(Stage stage, const TrainConfig& config);

// Tasks weighted by DWA, in task order.
std::vector<Task> weighted_tasks(const std::array<bool, kNumTasks>& active, bool include_main);

// Current lambda of every task, 1 for tasks outside the DWA set.
std::array<double, kNumTasks> current_lambdas(const TrainState& state, const std::array<bool, kNumTasks>& active,
                                              const TrainConfig& config);

// zero grads, forward/backward, one optimizer step. Throws TrainError on a
// non-finite loss before touching the parameters.
BatchLosses joint_step(TrainState& state, std::span<const TrainItem> batch, const Objective& objective);

using EpochCallback = std::function<void(const EpochStats&, const TrainState&)>;

// Trains the remaining epochs of one stage. At epoch 0 the optimizer and the
// DWA history start fresh; parameters carry over.
std::vector<EpochStats> run_stage(TrainState& state, const StagePlan& plan, const std::vector<PreparedExample>& data,
                                  const TrainConfig& config, const EpochCallback& on_epoch = {});

// Full curriculum. `on_stage_end` fires after each stage with its index.
using StageCallback = std::function<void(std::size_t, const TrainState&)>;
void run_curriculum(TrainState& state, const TrainConfig& config, const Vocab& vocab,
                    const EpochCallback& on_epoch = {}, const StageCallback& on_stage_end = {});

struct Evaluation {
  EvalReport report;
  std::vector<Tokens> hypotheses;
};

// Greedy decoding of every example under the stage's input layout.
Evaluation evaluate_model(const Model& model, const Vocab& vocab, const std::vector<ApeExample>& corpus,
                          Stage stage = Stage::FineTune);

// Model, optimizer moments, DWA history and counters in one checkpoint.
Checkpoint state_checkpoint(const TrainState& state, const Vocab& vocab);
TrainState state_from(const Checkpoint& ckpt);

}  // namespace ape
