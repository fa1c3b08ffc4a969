#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace ape {

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits
};

// -log softmax(logits)[target]; gradient softmax - onehot(target).
// Throws LabelError for a target out of range or fewer than two classes.
LossResult cross_entropy(std::span<const double> logits, int target);

// -(1 - p_t)^gamma * log(p_t), differentiated through both factors.
LossResult focal_loss(std::span<const double> logits, int target, double gamma);

// Cross-entropy scaled by (1 - beta) / (1 - beta^n_y), n_y = class_counts[target].
// Throws CountError when n_y is zero.
LossResult class_balanced_loss(std::span<const double> logits, int target, double beta,
                               std::span<const std::size_t> class_counts);

double class_balanced_weight(double beta, std::size_t n_y);

// beta = (N - 1) / N for N labeled samples.
double class_balanced_beta(std::size_t total_samples);

enum class LossKind { CrossEntropy, Focal, ClassBalanced };

std::string_view to_string(LossKind kind);

struct LossSpec {
  LossKind kind = LossKind::CrossEntropy;
  double gamma = 2.0;
  double beta = 0.0;
  std::vector<std::size_t> class_counts;

  // Throws ConfigError on gamma < 0, beta outside [0, 1) or a count vector
  // that does not fit the class count.
  void validate() const;

  // Returns the loss and writes d loss / d logits into `grad` when non-empty.
  double evaluate(std::span<const double> logits, int target, std::span<double> grad) const;
};

// The six jointly trained objectives. Pe is the main post-editing loss.
enum class Task : int { Pe = 0, Pos, Ner, Mlm, KtEnc, KtDec };
inline constexpr std::size_t kNumTasks = 6;
inline constexpr std::array<Task, kNumTasks> kAllTasks = {Task::Pe,  Task::Pos,   Task::Ner,
                                                          Task::Mlm, Task::KtEnc, Task::KtDec};

std::string_view to_string(Task task);
constexpr std::size_t index(Task t) { return static_cast<std::size_t>(t); }

using TaskLossSpecs = std::array<LossSpec, kNumTasks>;

// Pe and Mlm use cross-entropy, Pos, Ner and KtDec use focal loss, KtEnc uses
// the class-balanced loss with beta = (N-1)/N over `kt_enc_counts`.
TaskLossSpecs assign_losses(std::span<const std::size_t> kt_enc_counts, double gamma = 2.0);

}  // namespace ape
