#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ape {

// Dynamic Weight Average over K tasks.
//
//   w_k(t-1)   = L_k(t-1) / L_k(t-2)
//   lambda_k(t) = K exp(w_k(t-1) / T) / sum_i exp(w_i(t-1) / T)
//
// L_k are epoch-mean losses. Until two epochs are recorded every weight is 1.
// The weights always sum to K.
class DwaState {
 public:
  DwaState() = default;
  DwaState(std::size_t num_tasks, double temperature);

  // Appends one epoch of mean losses. Throws LossError on a wrong length or a
  // non-finite / non-positive value. Weights are left untouched.
  void record_epoch(std::span<const double> mean_losses);

  // Recomputes the weights from the last two recorded epochs.
  void update_weights();

  // Throws std::out_of_range for task >= K.
  double weight_for(std::size_t task) const;

  // Loss ratios used by the last update (all 1 when fewer than two epochs).
  const std::vector<double>& ratios() const noexcept { return ratios_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<std::vector<double>>& history() const noexcept { return history_; }

  std::size_t num_tasks() const noexcept { return weights_.size(); }
  double temperature() const noexcept { return temperature_; }

  // Restores a recorded history, then recomputes the weights.
  void restore(std::vector<std::vector<double>> history);

  bool operator==(const DwaState&) const = default;

 private:
  double temperature_ = 2.0;
  std::vector<std::vector<double>> history_;
  std::vector<double> ratios_;
  std::vector<double> weights_;
};

}  // namespace ape
