#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "ape/benchmark.hpp"
#include "ape/checkpoint.hpp"
#include "ape/config.hpp"
#include "ape/error.hpp"
#include "ape/labels.hpp"
#include "ape/metrics.hpp"
#include "ape/rng.hpp"
#include "ape/synthetic.hpp"
#include "ape/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ape::DataError("cannot write " + path.string());
  return out;
}

void cmd_gen(std::uint64_t seed, const fs::path& dir, const std::string& profile_name, std::size_t size,
             std::size_t test_size) {
  const auto profile = ape::NoiseProfile::named(profile_name);
  fs::create_directories(dir);
  ape::write_corpus_file((dir / "train.tsv").string(), ape::generate_synthetic_corpus(seed, size, profile));
  if (test_size > 0) {
    ape::write_corpus_file((dir / "test.tsv").string(),
                           ape::generate_synthetic_corpus(ape::mix_seed(seed, 1), test_size, profile));
  }
  std::cerr << "wrote " << size << " training and " << test_size << " test examples to " << dir.string() << '\n';
}

void cmd_label(const std::string& corpus_path, const fs::path& out_path, std::uint64_t seed) {
  const auto corpus = ape::read_corpus_file(corpus_path);
  auto out = open_out(out_path);
  ape::write_label_file(out, corpus, ape::Lexicon::standard().make_vocab(), seed);
}

void cmd_train(const std::string& plan_path, const fs::path& dir, const std::string& resume) {
  const auto config = ape::parse_train_config(ape::ConfigFile::load(plan_path));
  const auto vocab = ape::Lexicon::standard().make_vocab();
  fs::create_directories(dir);

  ape::TrainState state = resume.empty() ? ape::initial_state(config, vocab)
                                         : ape::state_from(ape::load_checkpoint(resume));
  auto log = open_out(dir / "train_log.csv");
  log << "stage,epoch,joint";
  for (auto t : ape::kAllTasks) log << ',' << ape::to_string(t) << ",lambda_" << ape::to_string(t);
  log << '\n';

  const auto on_epoch = [&](const ape::EpochStats& s, const ape::TrainState& st) {
    log << ape::to_string(s.stage) << ',' << s.epoch << ',' << ape::format_double(s.joint);
    for (std::size_t i = 0; i < ape::kNumTasks; ++i) {
      log << ',' << ape::format_double(s.mean[i]) << ',' << ape::format_double(s.lambda[i]);
    }
    log << '\n';
    std::cerr << ape::to_string(s.stage) << " epoch " << s.epoch + 1 << " joint " << s.joint << " pe "
              << s.mean[ape::index(ape::Task::Pe)] << '\n';
    ape::save_checkpoint((dir / "last_good.mtck").string(), ape::state_checkpoint(st, vocab));
  };
  const auto on_stage = [&](std::size_t i, const ape::TrainState& st) {
    const auto name = std::string(ape::to_string(config.plan.stages[i].stage));
    ape::save_checkpoint((dir / ("stage" + std::to_string(i + 1) + "_" + name + ".mtck")).string(),
                         ape::state_checkpoint(st, vocab));
  };
  ape::run_curriculum(state, config, vocab, on_epoch, on_stage);
  ape::save_checkpoint((dir / "final.mtck").string(), ape::state_checkpoint(state, vocab));

  if (config.eval) {
    const auto report = ape::evaluate_model(state.model, vocab, config.eval->load()).report;
    auto out = open_out(dir / "eval.csv");
    ape::write_report_csv(out, report);
    ape::write_report_table(std::cout, report);
  }
}

void cmd_eval(const std::string& ckpt_path, const std::string& corpus_path, const fs::path& report_path,
              const std::string& stage_name) {
  const auto ckpt = ape::load_checkpoint(ckpt_path);
  const auto model = ape::model_from(ckpt);
  const auto vocab = ape::vocab_from(ckpt);
  const auto eval = ape::evaluate_model(model, vocab, ape::read_corpus_file(corpus_path), ape::parse_stage(stage_name));
  auto out = open_out(report_path);
  ape::write_report_csv(out, eval.report);
  ape::write_report_table(std::cout, eval.report);
}

void cmd_ablate(const std::string& suite, std::uint64_t seed, std::size_t seeds, const fs::path& dir,
                const std::string& config_path) {
  const auto arms = ape::suite_arms(suite);
  const auto config =
      ape::parse_benchmark_config(config_path.empty() ? ape::ConfigFile() : ape::ConfigFile::load(config_path));
  ape::BenchmarkRunner runner(config, ape::make_benchmark_data(config));
  std::vector<ape::ArmResult> results;
  for (std::size_t k = 0; k < seeds; ++k) {
    for (const auto& arm : arms) {
      results.push_back(runner.run(suite, arm, seed + k));
      const auto& r = results.back();
      std::cerr << suite << ' ' << r.arm << " seed " << r.seed << " TER " << r.report.ter << " BLEU " << r.report.bleu
                << '\n';
    }
  }
  fs::create_directories(dir);
  auto out = open_out(dir / ("ablation_" + suite + ".csv"));
  ape::write_ablation_csv(out, results);
  ape::write_ablation_csv(std::cout, results);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automatic post-editing trainer: curriculum stages, multi-task fine-tuning, evaluation"};
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  std::string out;
  std::string profile = "ape";
  std::size_t size = 1000;
  std::size_t test_size = 200;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus");
  gen->add_option("--seed", seed, "Generator seed");
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--profile", profile, "Noise profile")->check(CLI::IsMember({"news", "ape"}));
  gen->add_option("--size", size, "Training examples")->check(CLI::PositiveNumber);
  gen->add_option("--test-size", test_size, "Held-out examples (0 for none)");

  std::string corpus;
  auto* label = app.add_subcommand("label", "Write POS/NER/MLM/Keep-Translate labels for a corpus");
  label->add_option("--corpus", corpus, "Corpus TSV")->required();
  label->add_option("--out", out, "Label TSV")->required();
  label->add_option("--seed", seed, "MLM mask seed");

  std::string plan;
  std::string resume;
  auto* train = app.add_subcommand("train", "Run a curriculum plan");
  train->add_option("--plan", plan, "Plan config file")->required();
  train->add_option("--out", out, "Checkpoint directory")->required();
  train->add_option("--resume", resume, "Resume from a state checkpoint");

  std::string ckpt;
  std::string report;
  std::string stage = "finetune";
  auto* eval = app.add_subcommand("eval", "Decode a corpus and report TER/BLEU");
  eval->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval->add_option("--corpus", corpus, "Corpus TSV")->required();
  eval->add_option("--report", report, "Report CSV")->required();
  eval->add_option("--stage", stage, "Input layout (step1, step2, step3, finetune)");

  std::string suite;
  std::size_t seeds = 1;
  std::string bench_config;
  auto* ablate = app.add_subcommand("ablate", "Run an ablation suite on the synthetic benchmark");
  ablate->add_option("--suite", suite, "Suite")->required()->check(CLI::IsMember({"cts", "mls", "dwa"}));
  ablate->add_option("--seed", seed, "First run seed");
  ablate->add_option("--seeds", seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  ablate->add_option("--out", out, "Output directory")->required();
  ablate->add_option("--config", bench_config, "Benchmark overrides (bench.* and model.* keys)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) cmd_gen(seed, out, profile, size, test_size);
    if (*label) cmd_label(corpus, out, seed);
    if (*train) cmd_train(plan, out, resume);
    if (*eval) cmd_eval(ckpt, corpus, report, stage);
    if (*ablate) cmd_ablate(suite, seed, seeds, out, bench_config);
  } catch (const ape::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ape::TrainError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const ape::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
