#include "actforge/optim.hpp"

#include <cmath>
#include <numbers>

#include "actforge/errors.hpp"

namespace actforge::optim {

double LrSchedule::at(std::size_t step) const {
  const std::size_t total = total_steps == 0 ? 1 : total_steps;
  const auto warmup = static_cast<std::size_t>(std::ceil(warmup_ratio * static_cast<double>(total)));
  if (step < warmup) return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  if (kind == Schedule::Constant) return base_lr;
  if (total <= warmup) return base_lr;
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * std::min(progress, 1.0)));
}

Adam::Adam(std::size_t dim, double beta1, double beta2, double eps, double weight_decay)
    : m_(dim, 0.0), v_(dim, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

policy::PolicyParams Adam::step(const policy::PolicyParams& params, std::span<const double> grad, double lr) {
  if (grad.size() != m_.size() || params.dim() != m_.size()) throw PreconditionError("Adam dimension mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i])) throw NumericError("non-finite gradient at index " + std::to_string(i));
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto w = params.weights();
  std::vector<double> next(w.begin(), w.end());
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double g = grad[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    if (m_[i] == 0.0 && weight_decay_ == 0.0) continue;
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    next[i] -= lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * next[i]);
  }
  auto out = params.updated(std::move(next));
  out.check_finite();
  return out;
}

}  // namespace actforge::optim
