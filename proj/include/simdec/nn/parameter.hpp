#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simdec/nn/tensor.hpp"

namespace simdec::nn {

/// A trainable tensor together with its gradient accumulator and Adam moments.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor init)
      : name(std::move(name)),
        value(std::move(init)),
        grad(value.shape()),
        adam_m(value.shape()),
        adam_v(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
  std::int64_t step_count = 0;
};

using ParameterList = std::vector<Parameter*>;

inline void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->zero_grad();
}

/// Value-only copy of a parameter set, used for best-checkpoint bookkeeping.
inline std::vector<Tensor> snapshot_values(const ParameterList& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

inline void restore_values(const ParameterList& params, const std::vector<Tensor>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace simdec::nn
