#include "ape/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ape/error.hpp"
#include "ape/rng.hpp"
#include "ape/synthetic.hpp"

namespace ape {

namespace {

constexpr std::array<std::pair<Task, const char*>, 5> kTaskKeys = {{{Task::Pos, "mls.pos"},
                                                                    {Task::Ner, "mls.ner"},
                                                                    {Task::Mlm, "mls.mlm"},
                                                                    {Task::KtEnc, "mls.kt_enc"},
                                                                    {Task::KtDec, "mls.kt_dec"}}};

CorpusSource parse_source(const ConfigFile& cfg, const std::string& prefix) {
  CorpusSource s;
  s.path = cfg.get_string(prefix + ".corpus", "");
  s.profile = cfg.get_string(prefix + ".profile", "ape");
  s.size = static_cast<std::size_t>(cfg.get_int(prefix + ".size", 0));
  s.seed = cfg.get_u64(prefix + ".seed", 0);
  if (s.path.empty() && s.size == 0) throw ConfigError(prefix + " needs a corpus path or a synthetic size");
  return s;
}

std::size_t positive(long long v, const std::string& key) {
  if (v < 1) throw ConfigError(key + " must be >= 1");
  return static_cast<std::size_t>(v);
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ' ';
    out += format_double(v);
  }
  return out;
}

std::vector<double> split_doubles(const std::string& text) {
  std::vector<double> out;
  for (const auto& t : split_whitespace(text)) out.push_back(parse_double(t));
  return out;
}

std::size_t config_size(const Checkpoint& c, const std::string& key) {
  const auto it = c.config.find(key);
  if (it == c.config.end()) throw DataError("checkpoint lacks " + key);
  return static_cast<std::size_t>(parse_double(it->second));
}

std::string config_text(const Checkpoint& c, const std::string& key) {
  const auto it = c.config.find(key);
  if (it == c.config.end()) throw DataError("checkpoint lacks " + key);
  return it->second;
}

}  // namespace

std::vector<ApeExample> CorpusSource::load() const {
  if (!path.empty()) return read_corpus_file(path);
  return generate_synthetic_corpus(seed, size, NoiseProfile::named(profile));
}

void CurriculumPlan::validate() const {
  if (stages.empty() || stages.back().stage != Stage::FineTune) throw ConfigError("a plan must end with finetune");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i > 0 && stages[i - 1].stage >= stages[i].stage) throw ConfigError("stages must be strictly ordered");
    if (stages[i].epochs == 0 || stages[i].batch_size == 0) throw ConfigError("epochs and batch size must be >= 1");
    if (!(stages[i].lr > 0.0)) throw ConfigError("stage learning rate must be positive");
  }
}

TrainConfig parse_train_config(const ConfigFile& cfg) {
  TrainConfig c;
  c.seed = cfg.get_u64("seed", 1);

  auto& m = c.model;
  m.d_model = static_cast<int>(cfg.get_int("model.d_h", m.d_model));
  m.d_shared = static_cast<int>(cfg.get_int("model.d_s", m.d_shared));
  m.layers = static_cast<int>(cfg.get_int("model.layers", m.layers));
  m.heads = static_cast<int>(cfg.get_int("model.heads", m.heads));
  m.d_ff = static_cast<int>(cfg.get_int("model.d_ff", m.d_ff));
  m.max_positions = static_cast<int>(cfg.get_int("model.max_positions", m.max_positions));

  auto& o = c.optimizer;
  o.lr = cfg.get_double("optim.lr", o.lr);
  o.beta1 = cfg.get_double("optim.beta1", o.beta1);
  o.beta2 = cfg.get_double("optim.beta2", o.beta2);
  o.eps = cfg.get_double("optim.eps", o.eps);
  o.weight_decay = cfg.get_double("optim.weight_decay", o.weight_decay);
  o.warmup = static_cast<std::size_t>(cfg.get_int("optim.warmup", static_cast<long long>(o.warmup)));
  o.validate();

  c.dwa.enabled = cfg.get_bool("dwa.enabled", c.dwa.enabled);
  c.dwa.temperature = cfg.get_double("dwa.T", c.dwa.temperature);
  c.dwa.include_main = cfg.get_bool("dwa.include_main", c.dwa.include_main);
  if (!(c.dwa.temperature > 0.0)) throw ConfigError("dwa.T must be positive");
  c.gamma = cfg.get_double("loss.gamma", c.gamma);
  if (!(c.gamma >= 0.0)) throw ConfigError("loss.gamma must be >= 0");
  for (const auto& [task, key] : kTaskKeys) c.tasks[index(task)] = cfg.get_bool(key, true);
  c.number_filter = cfg.get_bool("data.number_filter", c.number_filter);

  const auto names = cfg.get_list("stages", {"step1", "step2", "step3", "finetune"});
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string prefix = "stage." + std::to_string(i + 1);
    StagePlan s;
    s.stage = parse_stage(names[i]);
    s.corpus = parse_source(cfg, prefix);
    s.epochs = positive(cfg.get_int(prefix + ".epochs", 1), prefix + ".epochs");
    s.batch_size = positive(cfg.get_int(prefix + ".batch", s.stage == Stage::FineTune ? 16 : 32), prefix + ".batch");
    s.lr = cfg.get_double(prefix + ".lr", o.lr);
    c.plan.stages.push_back(s);
  }
  c.plan.validate();

  if (cfg.has("eval.corpus") || cfg.has("eval.size")) c.eval = parse_source(cfg, "eval");
  cfg.check_all_used();
  return c;
}

std::vector<PreparedExample> prepare_stage_data(const std::vector<ApeExample>& corpus, Stage stage,
                                                const Vocab& vocab) {
  std::vector<PreparedExample> out;
  out.reserve(corpus.size());
  for (const auto& ex : corpus) {
    PreparedExample p;
    p.input = assemble_stage_input(ex, stage, vocab);
    if (stage == Stage::FineTune) p.labels = build_task_labels(ex);
    out.push_back(std::move(p));
  }
  return out;
}

TrainState initial_state(const TrainConfig& config, const Vocab& vocab) {
  ModelConfig mc = config.model;
  mc.vocab_size = static_cast<int>(vocab.size());
  mc.target_vocab_size = static_cast<int>(vocab.size());
  TrainState s;
  s.model = Model(mc, mix_seed(config.seed, 1));
  s.optimizer = AdamW(config.optimizer);
  s.seed = config.seed;
  return s;
}

std::array<bool, kNumTasks> stage_tasks(Stage stage, const TrainConfig& config) {
  std::array<bool, kNumTasks> active{};
  active[index(Task::Pe)] = true;
  if (stage == Stage::FineTune) {
    for (auto t : kAllTasks) {
      if (t != Task::Pe) active[index(t)] = config.tasks[index(t)];
    }
  }
  return active;
}

std::vector<Task> weighted_tasks(const std::array<bool, kNumTasks>& active, bool include_main) {
  std::vector<Task> out;
  for (auto t : kAllTasks) {
    if (active[index(t)] && (include_main || t != Task::Pe)) out.push_back(t);
  }
  return out;
}

std::array<double, kNumTasks> current_lambdas(const TrainState& state, const std::array<bool, kNumTasks>& active,
                                              const TrainConfig& config) {
  std::array<double, kNumTasks> lambdas;
  lambdas.fill(1.0);
  if (!config.dwa.enabled) return lambdas;
  const auto tasks = weighted_tasks(active, config.dwa.include_main);
  if (state.dwa.num_tasks() != tasks.size()) return lambdas;
  for (std::size_t i = 0; i < tasks.size(); ++i) lambdas[index(tasks[i])] = state.dwa.weight_for(i);
  return lambdas;
}

BatchLosses joint_step(TrainState& state, std::span<const TrainItem> batch, const Objective& objective) {
  state.model.zero_grad();
  const BatchLosses losses = state.model.forward_backward(batch, objective, true);
  bool finite = std::isfinite(losses.joint);
  for (double v : losses.mean) finite = finite && std::isfinite(v);
  if (!finite) throw TrainError("training diverged: non-finite loss at optimizer step " +
                                std::to_string(state.optimizer.steps() + 1));
  state.optimizer.step(state.model);
  return losses;
}

std::vector<EpochStats> run_stage(TrainState& state, const StagePlan& plan, const std::vector<PreparedExample>& data,
                                  const TrainConfig& config, const EpochCallback& on_epoch) {
  if (data.empty()) throw EmptyInput("stage " + std::string(to_string(plan.stage)) + " has no examples");
  const auto active = stage_tasks(plan.stage, config);
  const auto dwa_tasks = weighted_tasks(active, config.dwa.include_main);
  const bool fine_tune = plan.stage == Stage::FineTune;
  if (fine_tune && !data.front().labels) throw LabelError("fine-tuning needs task labels");

  if (state.epoch == 0) {
    AdamWConfig oc = config.optimizer;
    oc.lr = plan.lr;
    state.optimizer = AdamW(oc);
    state.dwa = dwa_tasks.empty() ? DwaState() : DwaState(dwa_tasks.size(), config.dwa.temperature);
  }

  TaskLossSpecs specs = assign_losses(std::vector<std::size_t>{1, 1}, config.gamma);
  if (fine_tune) {
    std::vector<TaskLabels> labels;
    labels.reserve(data.size());
    for (const auto& d : data) labels.push_back(*d.labels);
    specs = assign_losses(count_classes(labels).kt_enc, config.gamma);
  }

  std::vector<EpochStats> all;
  for (; state.epoch < plan.epochs;) {
    EpochStats stats;
    stats.stage = plan.stage;
    stats.epoch = state.epoch;
    stats.lambda = current_lambdas(state, active, config);
    const Objective objective = fine_tune ? Objective::joint(active, stats.lambda, config.dwa.include_main, specs)
                                          : Objective::pe_only();

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(state.seed, state.stage_index, state.epoch));
    rng.shuffle(order);

    std::array<double, kNumTasks> sum{};
    std::array<std::size_t, kNumTasks> count{};
    double joint = 0.0;
    std::size_t batches = 0;
    std::vector<MlmMask> masks;
    std::vector<TrainItem> items;
    for (std::size_t start = 0; start < order.size(); start += plan.batch_size) {
      const std::size_t end = std::min(order.size(), start + plan.batch_size);
      masks.clear();
      masks.reserve(end - start);
      items.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto& d = data[order[k]];
        TrainItem item{&d.input, d.labels ? &*d.labels : nullptr, nullptr};
        if (active[index(Task::Mlm)]) {
          masks.push_back(mask_mlm(d.input.encoder_ids, mix_seed(state.seed, state.stage_index, state.epoch, order[k])));
          item.mlm = &masks.back();
        }
        items.push_back(item);
      }
      const BatchLosses r = joint_step(state, items, objective);
      for (std::size_t i = 0; i < kNumTasks; ++i) {
        sum[i] += r.mean[i] * static_cast<double>(r.count[i]);
        count[i] += r.count[i];
      }
      joint += r.joint;
      ++batches;
    }
    for (std::size_t i = 0; i < kNumTasks; ++i) {
      stats.mean[i] = count[i] ? sum[i] / static_cast<double>(count[i]) : 0.0;
    }
    stats.joint = joint / static_cast<double>(batches);

    if (fine_tune && config.dwa.enabled && !dwa_tasks.empty()) {
      std::vector<double> epoch_losses;
      for (auto t : dwa_tasks) epoch_losses.push_back(std::max(stats.mean[index(t)], std::numeric_limits<double>::min()));
      state.dwa.record_epoch(epoch_losses);
      state.dwa.update_weights();
    }
    ++state.epoch;
    if (on_epoch) on_epoch(stats, state);
    all.push_back(stats);
  }
  return all;
}

void run_curriculum(TrainState& state, const TrainConfig& config, const Vocab& vocab, const EpochCallback& on_epoch,
                    const StageCallback& on_stage_end) {
  config.plan.validate();
  for (; state.stage_index < config.plan.stages.size(); ++state.stage_index, state.epoch = 0) {
    const auto& plan = config.plan.stages[state.stage_index];
    auto corpus = plan.corpus.load();
    if (config.number_filter) corpus = apply_number_filter(corpus);
    const auto data = prepare_stage_data(corpus, plan.stage, vocab);
    run_stage(state, plan, data, config, on_epoch);
    if (on_stage_end) on_stage_end(state.stage_index, state);
  }
}

Evaluation evaluate_model(const Model& model, const Vocab& vocab, const std::vector<ApeExample>& corpus, Stage stage) {
  Evaluation e;
  std::vector<Tokens> refs;
  e.hypotheses.reserve(corpus.size());
  for (const auto& ex : corpus) {
    const StageInput in = assemble_stage_input(ex, stage, vocab);
    const Ids out = model.greedy_decode(in.encoder_ids, in.encoder_ids.size() + 16);
    e.hypotheses.push_back(to_tokens(out, vocab));
    refs.push_back(ex.pe);
  }
  e.report = evaluate_corpus(e.hypotheses, refs);
  return e;
}

Checkpoint state_checkpoint(const TrainState& state, const Vocab& vocab) {
  Checkpoint c = model_checkpoint(state.model, vocab);
  c.config["state.seed"] = std::to_string(state.seed);
  c.config["state.stage_index"] = std::to_string(state.stage_index);
  c.config["state.epoch"] = std::to_string(state.epoch);

  const auto& oc = state.optimizer.config();
  c.config["optim.lr"] = format_double(oc.lr);
  c.config["optim.beta1"] = format_double(oc.beta1);
  c.config["optim.beta2"] = format_double(oc.beta2);
  c.config["optim.eps"] = format_double(oc.eps);
  c.config["optim.weight_decay"] = format_double(oc.weight_decay);
  c.config["optim.warmup"] = std::to_string(oc.warmup);
  c.config["optim.steps"] = std::to_string(state.optimizer.steps());
  const auto names = state.model.named_parameters();
  const auto& m = state.optimizer.first_moments();
  const auto& v = state.optimizer.second_moments();
  for (std::size_t i = 0; i < m.size(); ++i) {
    c.records.push_back(to_record("optim.m." + names[i].first, m[i]));
    c.records.push_back(to_record("optim.v." + names[i].first, v[i]));
  }

  c.config["dwa.tasks"] = std::to_string(state.dwa.num_tasks());
  if (state.dwa.num_tasks() > 0) {
    c.config["dwa.T"] = format_double(state.dwa.temperature());
    c.config["dwa.epochs"] = std::to_string(state.dwa.history().size());
    for (std::size_t i = 0; i < state.dwa.history().size(); ++i) {
      c.config["dwa.history." + std::to_string(i)] = join_doubles(state.dwa.history()[i]);
    }
  }
  return c;
}

TrainState state_from(const Checkpoint& ckpt) {
  TrainState s;
  s.model = model_from(ckpt);
  s.seed = std::stoull(config_text(ckpt, "state.seed"));
  s.stage_index = config_size(ckpt, "state.stage_index");
  s.epoch = config_size(ckpt, "state.epoch");

  AdamWConfig oc;
  oc.lr = parse_double(config_text(ckpt, "optim.lr"));
  oc.beta1 = parse_double(config_text(ckpt, "optim.beta1"));
  oc.beta2 = parse_double(config_text(ckpt, "optim.beta2"));
  oc.eps = parse_double(config_text(ckpt, "optim.eps"));
  oc.weight_decay = parse_double(config_text(ckpt, "optim.weight_decay"));
  oc.warmup = config_size(ckpt, "optim.warmup");
  s.optimizer = AdamW(oc);
  const std::size_t steps = config_size(ckpt, "optim.steps");
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  for (const auto& [name, p] : s.model.named_parameters()) {
    const TensorRecord* rm = ckpt.find("optim.m." + name);
    const TensorRecord* rv = ckpt.find("optim.v." + name);
    if (!rm || !rv) break;
    m.push_back(from_record(*rm));
    v.push_back(from_record(*rv));
  }
  if (!m.empty() && m.size() != s.model.named_parameters().size()) throw DataError("incomplete optimizer moments");
  s.optimizer.restore(steps, std::move(m), std::move(v));

  const std::size_t tasks = config_size(ckpt, "dwa.tasks");
  if (tasks > 0) {
    s.dwa = DwaState(tasks, parse_double(config_text(ckpt, "dwa.T")));
    std::vector<std::vector<double>> history;
    const std::size_t epochs = config_size(ckpt, "dwa.epochs");
    for (std::size_t i = 0; i < epochs; ++i) history.push_back(split_doubles(config_text(ckpt, "dwa.history." + std::to_string(i))));
    s.dwa.restore(std::move(history));
  }
  return s;
}

}  // namespace ape
