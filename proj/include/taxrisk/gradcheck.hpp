#pragma once

#include <functional>
#include <string>
#include <vector>

#include "taxrisk/dense.hpp"

namespace taxrisk {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
};

// Central-difference check of analytic gradients. `loss(true)` must run the
// model and accumulate gradients into `params`; `loss(false)` must only
// return the scalar loss for the current parameter values. Coordinates are
// chosen by a seeded draw so reruns probe the same entries; all coordinates
// are probed when the model has fewer than `min_coords`. Relative error uses
// |a-n| / max(|a|,|n|,1e-8). epsilon must lie in [1e-7, 1e-3].
GradCheckResult grad_check(const std::function<double(bool)>& loss,
                           std::vector<Parameter*> params, double epsilon,
                           std::uint64_t seed, std::size_t min_coords = 50);

}  // namespace taxrisk
