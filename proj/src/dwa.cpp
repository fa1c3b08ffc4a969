#include "ape/dwa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ape/error.hpp"

namespace ape {

DwaState::DwaState(std::size_t num_tasks, double temperature)
    : temperature_(temperature), ratios_(num_tasks, 1.0), weights_(num_tasks, 1.0) {
  if (num_tasks == 0) throw ConfigError("DWA needs at least one task");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("DWA temperature must be positive");
}

void DwaState::record_epoch(std::span<const double> mean_losses) {
  if (mean_losses.size() != num_tasks()) {
    throw LossError("expected " + std::to_string(num_tasks()) + " task losses, got " +
                    std::to_string(mean_losses.size()));
  }
  for (double l : mean_losses) {
    if (!std::isfinite(l) || l <= 0.0) throw LossError("epoch loss must be finite and positive");
  }
  history_.emplace_back(mean_losses.begin(), mean_losses.end());
}

void DwaState::update_weights() {
  const std::size_t k = num_tasks();
  if (history_.size() < 2) {
    std::fill(ratios_.begin(), ratios_.end(), 1.0);
    std::fill(weights_.begin(), weights_.end(), 1.0);
    return;
  }
  const auto& last = history_[history_.size() - 1];
  const auto& prev = history_[history_.size() - 2];
  for (std::size_t i = 0; i < k; ++i) ratios_[i] = last[i] / prev[i];

  const double top = *std::max_element(ratios_.begin(), ratios_.end()) / temperature_;
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    weights_[i] = std::exp(ratios_[i] / temperature_ - top);
    sum += weights_[i];
  }
  for (auto& w : weights_) w = static_cast<double>(k) * w / sum;
}

double DwaState::weight_for(std::size_t task) const {
  if (task >= weights_.size()) throw std::out_of_range("DWA task index out of range");
  return weights_[task];
}

void DwaState::restore(std::vector<std::vector<double>> history) {
  history_.clear();
  for (const auto& row : history) record_epoch(row);
  update_weights();
}

}  // namespace ape
