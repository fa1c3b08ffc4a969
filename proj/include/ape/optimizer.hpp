#pragma once

#include <cstddef>
#include <vector>

#include "ape/model.hpp"

namespace ape {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::size_t warmup = 100;

  void validate() const;
  bool operator==(const AdamWConfig&) const = default;
};

// Linear warmup to `base` over `warmup` steps, then base * sqrt(warmup / step).
// Steps count from 1.
double inverse_sqrt_lr(double base, std::size_t warmup, std::size_t step);

// Adam with decoupled weight decay. Decay applies to weight matrices and
// embeddings, not to biases or normalization gains. Parameters and moments
// are rounded to float32 after every step so that a saved state reloads
// bit-exactly.
class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(const AdamWConfig& config) : config_(config) { config_.validate(); }

  const AdamWConfig& config() const noexcept { return config_; }
  std::size_t steps() const noexcept { return steps_; }
  double current_lr() const { return inverse_sqrt_lr(config_.lr, config_.warmup, steps_ + 1); }

  // One update from the gradients currently stored in `model`.
  void step(Model& model);

  void reset();

  const std::vector<Matrix>& first_moments() const noexcept { return m_; }
  const std::vector<Matrix>& second_moments() const noexcept { return v_; }
  void restore(std::size_t steps, std::vector<Matrix> first, std::vector<Matrix> second);

 private:
  AdamWConfig config_;
  std::size_t steps_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace ape
