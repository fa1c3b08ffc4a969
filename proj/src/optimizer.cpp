#include "ape/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "ape/error.hpp"

namespace ape {

namespace {

bool decays(const std::string& name) { return name.ends_with(".weight") || name.ends_with(".embed"); }

double to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

void AdamWConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
}

double inverse_sqrt_lr(double base, std::size_t warmup, std::size_t step) {
  const double s = static_cast<double>(std::max<std::size_t>(step, 1));
  if (warmup == 0) return base;
  const double w = static_cast<double>(warmup);
  return s < w ? base * s / w : base * std::sqrt(w / s);
}

void AdamW::reset() {
  steps_ = 0;
  m_.clear();
  v_.clear();
}

void AdamW::restore(std::size_t steps, std::vector<Matrix> first, std::vector<Matrix> second) {
  if (first.size() != second.size()) throw DataError("optimizer moment count mismatch");
  steps_ = steps;
  m_ = std::move(first);
  v_ = std::move(second);
}

void AdamW::step(Model& model) {
  auto params = model.named_parameters();
  if (m_.empty()) {
    for (const auto& [name, p] : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw DataError("optimizer state does not match the model");

  ++steps_;
  const double lr = inverse_sqrt_lr(config_.lr, config_.warmup, steps_);
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, p] = params[i];
    auto& m = m_[i];
    auto& v = v_[i];
    const double wd = decays(name) ? config_.weight_decay : 0.0;
    for (Eigen::Index j = 0; j < p->value.size(); ++j) {
      const double g = p->grad.data()[j];
      const double mj = config_.beta1 * m.data()[j] + (1.0 - config_.beta1) * g;
      const double vj = config_.beta2 * v.data()[j] + (1.0 - config_.beta2) * g * g;
      const double update = (mj / c1) / (std::sqrt(vj / c2) + config_.eps);
      double& w = p->value.data()[j];
      w = to_float(w - lr * (update + wd * w));
      m.data()[j] = to_float(mj);
      v.data()[j] = to_float(vj);
    }
  }
}

}  // namespace ape
