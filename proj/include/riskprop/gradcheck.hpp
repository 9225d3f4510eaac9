#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "riskprop/matrix.hpp"

namespace riskprop::nn {

struct GradCheckEntry {
  std::size_t tensor = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct GradCheckOptions {
  double h = 1e-5;
  double tol = 1e-4;
  /// Denominator floor: rel = |a - n| / max(|a|, |n|, scale_floor).
  double scale_floor = 1e-6;
  /// Check only this many uniformly drawn coordinates (all when unset).
  std::optional<std::size_t> subsample;
  std::uint64_t subsample_seed = 0;
};

/// Central differences (L(p+h) - L(p-h)) / 2h per scalar parameter, compared
/// against `analytic`. `loss` must read the parameters through `params`; each
/// coordinate is restored bit-exactly after probing.
GradCheckReport grad_check(const std::function<double()>& loss, std::span<Matrix* const> params,
                           std::span<const Matrix> analytic, const GradCheckOptions& opts = {});

}  // namespace riskprop::nn
