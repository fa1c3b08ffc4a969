#include "ape/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ape/error.hpp"

namespace ape {

namespace {

constexpr double kMinProb = 1e-12;

void check_target(std::span<const double> logits, int target) {
  if (logits.size() < 2) throw LabelError("need at least two classes");
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size()) {
    throw LabelError("target " + std::to_string(target) + " out of range");
  }
}

// Writes softmax(logits) into probs and returns log softmax(logits)[target].
double softmax_into(std::span<const double> logits, int target, std::span<double> probs) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    probs[j] = std::exp(logits[j] - m);
    sum += probs[j];
  }
  for (auto& p : probs) p /= sum;
  return logits[static_cast<std::size_t>(target)] - m - std::log(sum);
}

double cross_entropy_into(std::span<const double> logits, int target, std::span<double> grad,
                          std::vector<double>& scratch) {
  scratch.resize(logits.size());
  const double log_pt = softmax_into(logits, target, scratch);
  if (!grad.empty()) {
    for (std::size_t j = 0; j < logits.size(); ++j) grad[j] = scratch[j];
    grad[static_cast<std::size_t>(target)] -= 1.0;
  }
  return -log_pt;
}

double focal_into(std::span<const double> logits, int target, double gamma, std::span<double> grad,
                  std::vector<double>& probs) {
  probs.resize(logits.size());
  const double log_pt = softmax_into(logits, target, probs);
  const auto t = static_cast<std::size_t>(target);
  const double pt = std::max(probs[t], kMinProb);
  // 1 - p_t summed from the other classes keeps precision as p_t -> 1.
  double rest = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (j != t) rest += probs[j];
  }
  const double modulator = std::pow(rest, gamma);
  const double loss = -modulator * log_pt;
  if (!grad.empty()) {
    // d/dz_j = [(1-p_t)^g - g p_t (1-p_t)^(g-1) log p_t] (p_j - [j == t])
    const double slope = (gamma == 0.0 || rest == 0.0) ? 0.0 : gamma * pt * std::pow(rest, gamma - 1.0) * log_pt;
    const double coef = modulator - slope;
    for (std::size_t j = 0; j < probs.size(); ++j) grad[j] = coef * probs[j];
    grad[t] -= coef;
  }
  return loss;
}

LossResult run(std::span<const double> logits, const LossSpec& spec, int target) {
  LossResult r;
  r.grad.resize(logits.size());
  r.loss = spec.evaluate(logits, target, r.grad);
  return r;
}

LossSpec spec_of(LossKind kind, double gamma = 2.0) {
  LossSpec s;
  s.kind = kind;
  s.gamma = gamma;
  return s;
}

}  // namespace

LossResult cross_entropy(std::span<const double> logits, int target) {
  return run(logits, spec_of(LossKind::CrossEntropy), target);
}

LossResult focal_loss(std::span<const double> logits, int target, double gamma) {
  return run(logits, spec_of(LossKind::Focal, gamma), target);
}

LossResult class_balanced_loss(std::span<const double> logits, int target, double beta,
                               std::span<const std::size_t> class_counts) {
  LossSpec spec{LossKind::ClassBalanced, 0.0, beta, {class_counts.begin(), class_counts.end()}};
  return run(logits, spec, target);
}

double class_balanced_weight(double beta, std::size_t n_y) {
  if (n_y == 0) throw CountError("class has no samples");
  return (1.0 - beta) / (1.0 - std::pow(beta, static_cast<double>(n_y)));
}

double class_balanced_beta(std::size_t total_samples) {
  if (total_samples == 0) throw CountError("no samples");
  const double n = static_cast<double>(total_samples);
  return (n - 1.0) / n;
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::CrossEntropy: return "cross_entropy";
    case LossKind::Focal: return "focal";
    case LossKind::ClassBalanced: return "class_balanced";
  }
  return "?";
}

void LossSpec::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("focal gamma must be >= 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("class-balanced beta must lie in [0, 1)");
}

double LossSpec::evaluate(std::span<const double> logits, int target, std::span<double> grad) const {
  check_target(logits, target);
  thread_local std::vector<double> scratch;
  switch (kind) {
    case LossKind::CrossEntropy: return cross_entropy_into(logits, target, grad, scratch);
    case LossKind::Focal: return focal_into(logits, target, gamma, grad, scratch);
    case LossKind::ClassBalanced: {
      if (class_counts.size() != logits.size()) throw CountError("class count vector does not match classes");
      const double w = class_balanced_weight(beta, class_counts[static_cast<std::size_t>(target)]);
      const double ce = cross_entropy_into(logits, target, grad, scratch);
      for (auto& g : grad) g *= w;
      return w * ce;
    }
  }
  return 0.0;
}

std::string_view to_string(Task task) {
  switch (task) {
    case Task::Pe: return "pe";
    case Task::Pos: return "pos";
    case Task::Ner: return "ner";
    case Task::Mlm: return "mlm";
    case Task::KtEnc: return "kt_enc";
    case Task::KtDec: return "kt_dec";
  }
  return "?";
}

TaskLossSpecs assign_losses(std::span<const std::size_t> kt_enc_counts, double gamma) {
  TaskLossSpecs specs;
  specs[index(Task::Pe)] = spec_of(LossKind::CrossEntropy);
  specs[index(Task::Mlm)] = spec_of(LossKind::CrossEntropy);
  specs[index(Task::Pos)] = spec_of(LossKind::Focal, gamma);
  specs[index(Task::Ner)] = spec_of(LossKind::Focal, gamma);
  specs[index(Task::KtDec)] = spec_of(LossKind::Focal, gamma);

  auto& cb = specs[index(Task::KtEnc)];
  cb.kind = LossKind::ClassBalanced;
  cb.class_counts.assign(kt_enc_counts.begin(), kt_enc_counts.end());
  const std::size_t total = std::accumulate(kt_enc_counts.begin(), kt_enc_counts.end(), std::size_t{0});
  cb.beta = total == 0 ? 0.0 : class_balanced_beta(total);
  for (const auto& s : specs) s.validate();
  return specs;
}

}  // namespace ape
