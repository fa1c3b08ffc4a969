#pragma once

// Small models and batches shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ape/labels.hpp"
#include "ape/model.hpp"
#include "ape/synthetic.hpp"
#include "ape/trainer.hpp"

namespace ape::fixture {

// Vocabulary covering exactly the tokens of `corpus`.
inline Vocab corpus_vocab(const std::vector<ApeExample>& corpus) {
  Tokens all;
  for (const auto& ex : corpus) {
    all.insert(all.end(), ex.src.begin(), ex.src.end());
    all.insert(all.end(), ex.mt.begin(), ex.mt.end());
    all.insert(all.end(), ex.pe.begin(), ex.pe.end());
    if (ex.mt_ext) all.insert(all.end(), ex.mt_ext->begin(), ex.mt_ext->end());
  }
  return Vocab::from_tokens(all);
}

inline ModelConfig tiny_config(const Vocab& vocab) {
  ModelConfig c;
  c.d_model = 8;
  c.d_shared = 6;
  c.layers = 1;
  c.heads = 2;
  c.d_ff = 12;
  c.max_positions = 96;
  c.vocab_size = static_cast<int>(vocab.size());
  c.target_vocab_size = static_cast<int>(vocab.size());
  return c;
}

// A FineTune batch with every label and an MLM mask. Not copyable: the items
// point into the owned data.
class Batch {
 public:
  Batch(const std::vector<ApeExample>& corpus, const Vocab& vocab, std::uint64_t mask_seed)
      : data_(prepare_stage_data(corpus, Stage::FineTune, vocab)) {
    masks_.reserve(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) {
      masks_.push_back(mask_mlm(data_[i].input.encoder_ids, mask_seed + i));
      labels_.push_back(*data_[i].labels);
    }
    for (std::size_t i = 0; i < data_.size(); ++i) items_.push_back({&data_[i].input, &labels_[i], &masks_[i]});
  }
  Batch(const Batch&) = delete;
  Batch& operator=(const Batch&) = delete;

  std::span<const TrainItem> items() const { return items_; }
  const std::vector<TaskLabels>& labels() const { return labels_; }
  TaskLossSpecs losses() const { return assign_losses(count_classes(labels_).kt_enc); }

 private:
  std::vector<PreparedExample> data_;
  std::vector<MlmMask> masks_;
  std::vector<TaskLabels> labels_;
  std::vector<TrainItem> items_;
};

inline std::array<bool, kNumTasks> all_tasks() {
  std::array<bool, kNumTasks> a;
  a.fill(true);
  return a;
}

// Only task `t`, weight 1.
inline Objective single_task(Task t, const TaskLossSpecs& losses) {
  Objective o;
  o.active[index(t)] = true;
  o.coefficient[index(t)] = 1.0;
  o.losses = losses;
  return o;
}

struct FdResult {
  double worst = 0.0;
  std::string parameter;
};

// Largest relative gap between the analytic gradient of `objective` and a
// central difference with step h, over every parameter entry.
inline FdResult finite_difference_check(Model& model, std::span<const TrainItem> items, const Objective& objective,
                                        double h = 1e-4) {
  model.zero_grad();
  model.forward_backward(items, objective, true);
  FdResult r;
  for (auto& [name, p] : model.named_parameters()) {
    for (Eigen::Index j = 0; j < p->value.size(); ++j) {
      double& w = p->value.data()[j];
      const double w0 = w;
      w = w0 + h;
      const double up = model.forward_backward(items, objective, false).joint;
      w = w0 - h;
      const double down = model.forward_backward(items, objective, false).joint;
      w = w0;
      const double fd = (up - down) / (2 * h);
      const double an = p->grad.data()[j];
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
      if (rel > r.worst) {
        r.worst = rel;
        r.parameter = name;
      }
    }
  }
  return r;
}

// Max |a - b| over all parameter gradients of two equally shaped models.
inline double max_grad_gap(const Model& a, const Model& b) {
  const auto pa = a.named_parameters();
  const auto pb = b.named_parameters();
  double gap = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) gap = std::max(gap, (pa[i].second->grad - pb[i].second->grad).cwiseAbs().maxCoeff());
  return gap;
}

}  // namespace ape::fixture
