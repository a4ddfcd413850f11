#include "taxrisk/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "taxrisk/errors.hpp"
#include "taxrisk/rng.hpp"

namespace taxrisk {

GradCheckResult grad_check(const std::function<double(bool)>& loss,
                           std::vector<Parameter*> params, double epsilon,
                           std::uint64_t seed, std::size_t min_coords) {
  if (epsilon < 1e-7 || epsilon > 1e-3) {
    throw InvalidInputError("grad_check epsilon must lie in [1e-7, 1e-3]");
  }
  if (params.empty()) throw InvalidInputError("grad_check with no parameters");

  for (Parameter* p : params) p->zero_grad();
  loss(true);
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) {
    analytic.push_back(p->grad);
    p->zero_grad();
  }

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t k = 0; k < params.size(); ++k)
    for (std::size_t i = 0; i < params[k]->value.size(); ++i) coords.emplace_back(k, i);

  if (coords.size() > min_coords) {
    Rng rng(seed);
    rng.shuffle(coords);
    coords.resize(min_coords);
  }

  GradCheckResult result;
  result.coords_checked = coords.size();
  for (const auto& [k, i] : coords) {
    double& slot = params[k]->value[i];
    const double saved = slot;
    slot = saved + epsilon;
    const double up = loss(false);
    slot = saved - epsilon;
    const double down = loss(false);
    slot = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = analytic[k][i];
    const double rel = std::abs(a - numeric) /
                       std::max({std::abs(a), std::abs(numeric), 1e-8});
    if (rel > result.max_rel_err) {
      result.max_rel_err = rel;
      result.worst_param = params[k]->name;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace taxrisk
