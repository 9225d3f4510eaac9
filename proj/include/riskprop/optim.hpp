#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "riskprop/matrix.hpp"

namespace riskprop::nn {

struct AdamConfig {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments are allocated on the first step and
/// shaped like the parameters they track.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(std::span<Matrix* const> params, std::span<const Matrix> grads);

  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }

 private:
  AdamConfig cfg_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::uint64_t t_ = 0;
};

}  // namespace riskprop::nn
