#include "simdec/nn/adam.hpp"

#include <cmath>

namespace simdec::nn {

void adam_step(const ParameterList& params, const AdamConfig& config) {
  for (Parameter* p : params) {
    ++p->step_count;
    const double t = static_cast<double>(p->step_count);
    const double correction1 = 1.0 - std::pow(config.beta1, t);
    const double correction2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      double& m = p->adam_m[i];
      double& v = p->adam_v[i];
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g * g;
      const double m_hat = m / correction1;
      const double v_hat = v / correction2;
      double& w = p->value[i];
      if (config.weight_decay > 0.0) w -= config.lr * config.weight_decay * w;
      w -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
    p->zero_grad();
  }
}

}  // namespace simdec::nn
