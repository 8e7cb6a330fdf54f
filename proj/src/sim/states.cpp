#include "simdec/sim/states.hpp"

#include <stdexcept>

#include "simdec/errors.hpp"
#include "simdec/nn/functional.hpp"

namespace simdec::sim {

int decode_binary(double probability) { return probability >= 0.5 ? 1 : 0; }

int decode_time(std::span<const double> scores) { return static_cast<int>(nn::argmax(scores)) + 1; }

void SimulatedStates::decode_hard() {
  const std::size_t n = risk_prob.size();
  risk.assign(n, 0);
  time_class.assign(n, 1);
  status.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    risk[i] = decode_binary(risk_prob[i]);
    time_class[i] = decode_time(time_scores.row(i));
    status[i] = decode_binary(status_prob[i]);
  }
}

nn::Tensor order_summaries(const std::array<nn::Tensor, 4>& group_tokens) {
  nn::Tensor out = group_tokens[0];
  for (std::size_t k = 1; k < group_tokens.size(); ++k) {
    require_same_shape(out, group_tokens[k], "order_summaries");
    out += group_tokens[k];
  }
  out *= 0.25;
  return out;
}

nn::Tensor pool_global(const nn::Tensor& summaries) {
  const std::size_t n = summaries.rows();
  if (n == 0) throw std::invalid_argument("pool_global: empty batch");
  const std::size_t e = summaries.cols();
  nn::Tensor out = nn::Tensor::vector(e);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < e; ++j) out[j] += summaries(i, j);
  }
  out *= 1.0 / static_cast<double>(n);
  return out;
}

double state_loss(std::span<const double> risk_prob, const nn::Tensor& time_probs,
                  std::span<const double> status_prob, std::span<const int> risk, std::span<const int> time_class,
                  std::span<const int> status) {
  const std::size_t n = risk.size();
  if (risk_prob.size() != n || status_prob.size() != n || time_probs.rows() != n || time_class.size() != n ||
      status.size() != n) {
    throw ShapeError("state_loss: row count mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = risk_prob[i] - risk[i];
    const double ds = status_prob[i] - status[i];
    total += dr * dr + ds * ds;
    for (std::size_t k = 0; k < time_probs.cols(); ++k) {
      const double target = static_cast<int>(k) + 1 == time_class[i] ? 1.0 : 0.0;
      const double dt = time_probs(i, k) - target;
      total += dt * dt;
    }
  }
  return total;
}

}  // namespace simdec::sim
