#include "cogkr/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "cogkr/errors.hpp"

namespace cogkr {

Scalar relative_error(Scalar analytic, Scalar numeric, Scalar floor) {
  const Scalar denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(const ScalarObjective& f, ParameterStore& params, const std::vector<Coordinate>& coords,
                           Scalar eps) {
  GradBuffer analytic(params);
  const Scalar base = f(params, &analytic);
  if (!std::isfinite(base)) throw NumericError("grad_check: non-finite objective");

  GradCheckResult result;
  for (const auto& c : coords) {
    Scalar& x = params[c.param].value[c.flat];
    const Scalar saved = x;
    x = saved + eps;
    const Scalar up = f(params, nullptr);
    x = saved - eps;
    const Scalar down = f(params, nullptr);
    x = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) throw NumericError("grad_check: non-finite objective");
    const Scalar numeric = (up - down) / (2 * eps);
    const Scalar a = analytic.coordinate(c.param, c.flat);
    const Scalar err = relative_error(a, numeric);
    ++result.coordinates;
    if (err > result.max_relative_error || result.coordinates == 1) {
      result.max_relative_error = err;
      result.worst = c;
      result.worst_analytic = a;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

std::vector<Coordinate> sample_coordinates(const ParameterStore& params, const GradBuffer& touched,
                                           std::size_t per_param, Rng& rng) {
  std::vector<Coordinate> out;
  for (ParamId id = 0; id < params.size(); ++id) {
    const auto& p = params[id];
    if (p.value.size() == 0) continue;
    std::vector<std::size_t> rows;
    if (p.row_sparse) rows = touched.touched_rows(id);
    for (std::size_t k = 0; k < per_param; ++k) {
      std::size_t flat;
      if (!rows.empty()) {
        const std::size_t r = rows[uniform_index(rng, rows.size())];
        flat = r * p.value.cols() + uniform_index(rng, p.value.cols());
      } else {
        flat = uniform_index(rng, p.value.size());
      }
      out.push_back({id, flat});
    }
  }
  return out;
}

}  // namespace cogkr
