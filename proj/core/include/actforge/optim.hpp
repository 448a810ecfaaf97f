#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "actforge/policy.hpp"

namespace actforge::optim {

enum class Schedule { Constant, Cosine };

/// Linear warmup over ceil(warmup_ratio * total_steps) steps, then constant
/// or cosine decay to zero at total_steps.
struct LrSchedule {
  double base_lr = 0.05;
  Schedule kind = Schedule::Cosine;
  double warmup_ratio = 0.1;
  std::size_t total_steps = 1;

  double at(std::size_t step) const;
};

/// Adam with decoupled weight decay (AdamW). Moments are dense; the update
/// visits every coordinate in index order.
class Adam {
 public:
  explicit Adam(std::size_t dim, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                double weight_decay = 0.0);

  /// Returns the updated snapshot (version_tag + 1). Throws NumericError on
  /// a non-finite gradient.
  policy::PolicyParams step(const policy::PolicyParams& params, std::span<const double> grad, double lr);

  std::size_t steps_taken() const { return t_; }

 private:
  std::vector<double> m_, v_;
  double beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
};

}  // namespace actforge::optim
