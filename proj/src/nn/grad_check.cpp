#include "simdec/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace simdec::nn {

GradCheckReport grad_check(const ParameterList& params, const std::function<double()>& loss,
                           const std::function<void()>& loss_and_backward, const GradCheckOptions& options) {
  GradCheckReport report;
  zero_grads(params);
  loss_and_backward();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const Parameter* p : params) analytic.push_back(p->grad);
  zero_grads(params);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const std::string where = p.name + "[" + std::to_string(i) + "]";
      const double saved = p.value[i];
      p.value[i] = saved + options.step;
      const double plus = loss();
      p.value[i] = saved - options.step;
      const double minus = loss();
      p.value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[k][i];
      if (!std::isfinite(plus) || !std::isfinite(minus) || !std::isfinite(a)) {
        report.passed = false;
        report.failure = "non-finite value at " + where;
        report.worst_location = where;
        return report;
      }
      const double denom = std::max({std::abs(a), std::abs(numeric), options.scale_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coordinates_checked;
      if (rel >= report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_location = where;
      }
    }
  }
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace simdec::nn
