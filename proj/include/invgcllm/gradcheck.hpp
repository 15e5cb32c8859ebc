#pragma once

#include <functional>
#include <span>
#include <vector>

#include "invgcllm/params.hpp"

namespace invgcllm {

// Central finite differences against an analytic gradient. Per-coordinate
// relative error |a - f| / max(1e-8, |a| + |f|); returns the maximum.
// Throws if the loss evaluates to a non-finite value, naming the coordinate.
double finite_diff_check(const std::function<double(std::span<const double>)>& loss,
                         std::span<const double> point,
                         std::span<const double> analytic_grad, double eps = 1e-5);

// Convenience overload over a full ParameterSet.
double finite_diff_check(const std::function<double(const ParameterSet&)>& loss,
                         const ParameterSet& p, std::span<const double> analytic_grad,
                         double eps = 1e-5);

}  // namespace invgcllm
