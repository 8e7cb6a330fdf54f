#pragma once

#include <functional>
#include <string>

#include "simdec/nn/parameter.hpp"

namespace simdec::nn {

struct GradCheckOptions {
  double step = 1e-5;        // central-difference half width h
  double tolerance = 1e-4;   // maximum accepted relative error
  /// Denominator floor for the relative error, so coordinates whose true gradient
  /// is ~0 are judged on absolute error instead of amplified round-off.
  double scale_floor = 1e-6;
};

struct GradCheckReport {
  bool passed = false;
  double max_relative_error = 0.0;
  std::string worst_location;  // "param[index]"
  std::size_t coordinates_checked = 0;
  std::string failure;         // set when a non-finite value was seen
};

/// Compares analytic gradients with central finite differences on every coordinate
/// of `params`. `loss` must be a deterministic forward pass; `loss_and_backward`
/// must zero nothing itself but fill each parameter's grad (grads are zeroed before
/// the call). relative error = |a - n| / max(|a|, |n|, scale_floor).
GradCheckReport grad_check(const ParameterList& params, const std::function<double()>& loss,
                           const std::function<void()>& loss_and_backward, const GradCheckOptions& options = {});

}  // namespace simdec::nn
