#include "invgcllm/gradcheck.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace invgcllm {

double finite_diff_check(const std::function<double(std::span<const double>)>& loss,
                         std::span<const double> point,
                         std::span<const double> analytic_grad, double eps) {
  if (point.size() != analytic_grad.size())
    throw std::invalid_argument("finite_diff_check: gradient length mismatch");
  std::vector<double> x(point.begin(), point.end());
  double max_rel = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = loss(x);
    x[i] = saved - eps;
    const double down = loss(x);
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw std::runtime_error("finite_diff_check: non-finite loss at coordinate " +
                               std::to_string(i));
    const double fd = (up - down) / (2.0 * eps);
    const double a = analytic_grad[i];
    const double rel = std::abs(a - fd) / std::max(1e-8, std::abs(a) + std::abs(fd));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

double finite_diff_check(const std::function<double(const ParameterSet&)>& loss,
                         const ParameterSet& p, std::span<const double> analytic_grad,
                         double eps) {
  ParameterSet work = p;
  auto flat_loss = [&](std::span<const double> flat) {
    work.unflatten(flat);
    return loss(work);
  };
  const std::vector<double> x0 = p.flatten();
  return finite_diff_check(flat_loss, x0, analytic_grad, eps);
}

}  // namespace invgcllm
