#pragma once

#include "simdec/nn/parameter.hpp"

namespace simdec::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Decoupled (AdamW-style) decay rate; 0 disables it.
  double weight_decay = 0.0;
};

/// One bias-corrected Adam update on every parameter, then zeroes the gradients.
void adam_step(const ParameterList& params, const AdamConfig& config);

}  // namespace simdec::nn
