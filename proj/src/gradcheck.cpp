#include "riskprop/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "riskprop/error.hpp"
#include "riskprop/rng.hpp"

namespace riskprop::nn {

GradCheckReport grad_check(const std::function<double()>& loss, std::span<Matrix* const> params,
                           std::span<const Matrix> analytic, const GradCheckOptions& opts) {
  if (params.size() != analytic.size()) throw Error("grad_check: parameter/gradient count mismatch");
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (!params[t]->same_shape(analytic[t])) throw Error("grad_check: shape mismatch for tensor " + std::to_string(t));
    for (std::size_t k = 0; k < params[t]->size(); ++k) coords.emplace_back(t, k);
  }
  if (opts.subsample && *opts.subsample < coords.size()) {
    Rng rng(opts.subsample_seed);
    std::vector<std::pair<std::size_t, std::size_t>> picked;
    std::sample(coords.begin(), coords.end(), std::back_inserter(picked), *opts.subsample, rng);
    coords = std::move(picked);
  }

  GradCheckReport report;
  report.tolerance = opts.tol;
  for (auto [t, k] : coords) {
    double& slot = params[t]->values()[k];
    const double original = slot;
    slot = original + opts.h;
    const double up = loss();
    slot = original - opts.h;
    const double down = loss();
    slot = original;
    GradCheckEntry e;
    e.tensor = t;
    e.index = k;
    e.analytic = analytic[t].values()[k];
    e.numeric = (up - down) / (2.0 * opts.h);
    const double scale = std::max({std::abs(e.analytic), std::abs(e.numeric), opts.scale_floor});
    e.rel_error = std::abs(e.analytic - e.numeric) / scale;
    report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    report.entries.push_back(e);
  }
  report.passed = report.max_rel_error < opts.tol;
  return report;
}

}  // namespace riskprop::nn
