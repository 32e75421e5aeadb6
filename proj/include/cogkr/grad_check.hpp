#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cogkr/parameters.hpp"
#include "cogkr/random.hpp"

namespace cogkr {

// Scalar objective of the parameters. When `grads` is non-null the objective
// must also write its analytic gradient there. Any sampling inside must be
// frozen (replayed) so repeated evaluations see the same discrete choices.
using ScalarObjective = std::function<Scalar(const ParameterStore&, GradBuffer*)>;

struct Coordinate {
  ParamId param = 0;
  std::size_t flat = 0;
};

struct GradCheckResult {
  Scalar max_relative_error = 0;
  std::size_t coordinates = 0;
  Coordinate worst{};
  Scalar worst_analytic = 0;
  Scalar worst_numeric = 0;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
// gradient is zero from dividing roundoff by roundoff.
Scalar relative_error(Scalar analytic, Scalar numeric, Scalar floor = 1e-8);

// Central differences (f(x+eps) - f(x-eps)) / (2 eps) at each coordinate.
// Parameter values are restored afterwards.
GradCheckResult grad_check(const ScalarObjective& f, ParameterStore& params, const std::vector<Coordinate>& coords,
                           Scalar eps = 1e-5);

// `per_param` coordinates from every parameter tensor. For row-sparse tables
// the rows listed in `touched` (by the analytic gradient) are preferred, since
// untouched rows have identically zero gradient.
std::vector<Coordinate> sample_coordinates(const ParameterStore& params, const GradBuffer& touched,
                                           std::size_t per_param, Rng& rng);

}  // namespace cogkr
