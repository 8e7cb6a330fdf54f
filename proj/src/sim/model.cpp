#include "simdec/sim/model.hpp"

#include <stdexcept>

#include "simdec/errors.hpp"
#include "simdec/nn/checkpoint.hpp"
#include "simdec/nn/functional.hpp"

namespace simdec::sim {

namespace {

nn::Tensor column(std::span<const int> values) {
  nn::Tensor t = nn::Tensor::matrix(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) t[i] = values[i];
  return t;
}

std::vector<double> flat(const nn::Tensor& t) { return {t.values().begin(), t.values().end()}; }

/// d(loss)/d(logit) for a sigmoid head under squared error against 0/1 targets.
nn::Tensor binary_head_grad(std::span<const double> prob, std::span<const int> target) {
  nn::Tensor g = nn::Tensor::matrix(prob.size(), 1);
  for (std::size_t i = 0; i < prob.size(); ++i) {
    g[i] = 2.0 * (prob[i] - target[i]) * prob[i] * (1.0 - prob[i]);
  }
  return g;
}

nn::Tensor time_head_grad(const nn::Tensor& probs, const nn::Tensor& onehot) {
  nn::Tensor d = probs;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = 2.0 * (probs[i] - onehot[i]);
  return nn::softmax_rows_backward(probs, d);
}

void check_batch(const data::OrderFeatures& features, std::span<const int> modes, const ModelShape& shape) {
  const std::size_t n = features.size();
  if (n == 0) throw std::invalid_argument("state model: empty batch");
  if (modes.size() != n) throw ShapeError("state model: mode count differs from order count");
  for (std::size_t k = 0; k < 4; ++k) {
    if (features.groups[k].rows() != n || features.groups[k].cols() != shape.group_dims[k]) {
      throw ShapeError("state model: group " + std::to_string(k) + " has shape " +
                       features.groups[k].shape_string() + ", expected " + std::to_string(n) + "x" +
                       std::to_string(shape.group_dims[k]));
    }
  }
  for (int m : modes) {
    if (m < 0 || m >= shape.n_modes) throw std::out_of_range("state model: mode " + std::to_string(m));
  }
}

SimulatedStates heads_to_states(const nn::Tensor& risk_logit, const nn::Tensor& time_logits,
                                const nn::Tensor& status_logit) {
  SimulatedStates s;
  s.risk_prob = flat(nn::sigmoid(risk_logit));
  s.time_scores = time_logits;
  s.time_probs = nn::softmax_rows(time_logits);
  s.status_prob = flat(nn::sigmoid(status_logit));
  s.decode_hard();
  return s;
}

}  // namespace

nlohmann::json ModelShape::to_json() const {
  return {{"group_dims", group_dims},       {"n_modes", n_modes},       {"n_time_classes", n_time_classes},
          {"embed_dim", embed_dim},         {"hidden_dim", hidden_dim}, {"reconsume_z", reconsume_z}};
}

ModelShape ModelShape::from_json(const nlohmann::json& j) {
  ModelShape s;
  s.group_dims = j.at("group_dims").get<std::array<std::size_t, 4>>();
  s.n_modes = j.at("n_modes").get<int>();
  s.n_time_classes = j.at("n_time_classes").get<int>();
  s.embed_dim = j.at("embed_dim").get<std::size_t>();
  s.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  s.reconsume_z = j.value("reconsume_z", false);
  return s;
}

ModelShape ModelShape::for_dataset(const data::EncodedDataset& ds, std::size_t embed_dim, std::size_t hidden_dim) {
  ModelShape s;
  s.group_dims = ds.features.dims();
  s.n_modes = ds.n_modes;
  s.n_time_classes = ds.n_time_classes;
  s.embed_dim = embed_dim;
  s.hidden_dim = hidden_dim;
  return s;
}

nlohmann::json StateModel::hyper() const { return {{"kind", kind()}, {"shape", shape().to_json()}}; }

void StateModel::save(const std::filesystem::path& path) { nn::save_checkpoint(path, parameters(), hyper()); }

// ---------------------------------------------------------------------------
// Encoder

OrderEncoder::OrderEncoder(const std::string& name, const ModelShape& shape, nn::Rng& rng) {
  static const char* keys[4] = {"p", "c", "s", "o"};
  for (std::size_t k = 0; k < 4; ++k) {
    group_proj[k] = nn::Linear(name + ".proj_" + keys[k], shape.group_dims[k], shape.embed_dim, rng);
  }
  global_proj = nn::Linear(name + ".proj_global", shape.embed_dim, shape.embed_dim, rng);
  mode_embed = nn::Embedding(name + ".mode_embed", static_cast<std::size_t>(shape.n_modes), shape.embed_dim, rng);
  lstm = nn::LstmCell(name + ".lstm", shape.embed_dim, shape.hidden_dim, rng);
}

EncoderTrace OrderEncoder::forward(const data::OrderFeatures& features, std::span<const int> modes,
                                   const nn::Tensor* pooled, EncoderCache* cache) const {
  const std::size_t n = features.size();
  const std::size_t e = global_proj.out_features();
  EncoderTrace trace;
  for (std::size_t k = 0; k < 4; ++k) trace.tokens[k] = group_proj[k].forward(features.groups[k]);
  if (pooled != nullptr) {
    if (pooled->size() != e) throw ShapeError("encoder: pooled vector has wrong size");
    trace.pooled = nn::Tensor({e}, std::vector<double>(pooled->values().begin(), pooled->values().end()));
  } else {
    trace.pooled = pool_global(order_summaries({trace.tokens[0], trace.tokens[1], trace.tokens[2], trace.tokens[3]}));
  }
  nn::Tensor pooled_row({1, e}, std::vector<double>(trace.pooled.values().begin(), trace.pooled.values().end()));
  const nn::Tensor g = global_proj.forward(pooled_row);
  trace.tokens[4] = nn::Tensor::matrix(n, e);
  for (std::size_t i = 0; i < n; ++i) std::copy(g.values().begin(), g.values().end(), trace.tokens[4].row(i).begin());
  trace.tokens[5] = mode_embed.forward(modes);

  nn::LstmState state = lstm.zero_state(n);
  for (std::size_t t = 0; t < 6; ++t) {
    state = lstm.forward(trace.tokens[t], state, cache != nullptr ? &cache->steps[t] : nullptr);
  }
  trace.z = state.h;
  trace.final_state = std::move(state);
  if (cache != nullptr) {
    for (std::size_t k = 0; k < 4; ++k) cache->inputs[k] = features.groups[k];
    cache->modes.assign(modes.begin(), modes.end());
    cache->pooled_given = pooled != nullptr;
    cache->pooled_row = std::move(pooled_row);
  }
  return trace;
}

void OrderEncoder::backward(const EncoderCache& cache, const nn::Tensor& dh, const nn::Tensor& dc) {
  std::array<nn::Tensor, 6> dtokens;
  nn::Tensor dh_cur = dh;
  nn::Tensor dc_cur = dc;
  for (std::size_t t = 6; t-- > 0;) {
    nn::LstmGrads g = lstm.backward(cache.steps[t], dh_cur, dc_cur);
    dtokens[t] = std::move(g.dx);
    dh_cur = std::move(g.dh_prev);
    dc_cur = std::move(g.dc_prev);
  }
  mode_embed.backward(cache.modes, dtokens[5]);

  const std::size_t n = dtokens[4].rows();
  const std::size_t e = dtokens[4].cols();
  nn::Tensor dg = nn::Tensor::matrix(1, e);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < e; ++j) dg[j] += dtokens[4](i, j);
  }
  const nn::Tensor dpooled = global_proj.backward(cache.pooled_row, dg);
  for (std::size_t k = 0; k < 4; ++k) {
    nn::Tensor& d = dtokens[k];
    if (!cache.pooled_given) {
      const double share = 0.25 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < e; ++j) d(i, j) += share * dpooled[j];
      }
    }
    group_proj[k].backward(cache.inputs[k], d);
  }
}

void OrderEncoder::collect(nn::ParameterList& out) {
  for (nn::Linear& l : group_proj) l.collect(out);
  global_proj.collect(out);
  mode_embed.collect(out);
  lstm.collect(out);
}

// ---------------------------------------------------------------------------
// Autoregressive simulator

struct SimulatorModel::Pass {
  EncoderCache enc;
  EncoderTrace trace;
  nn::LstmCache steps[3];
  nn::LstmState s1, s2, s3;
  nn::Tensor risk_in, time_in;  // teacher inputs
  std::vector<double> risk_prob, status_prob;
  nn::Tensor time_probs;
};

SimulatorModel::SimulatorModel(const ModelShape& shape, std::uint64_t seed) : shape_(shape) {
  nn::Rng rng(seed);
  const std::size_t h = shape.hidden_dim;
  const auto k = static_cast<std::size_t>(shape.n_time_classes);
  encoder = OrderEncoder("sim.encoder", shape, rng);
  decoder = nn::LstmCell("sim.decoder", h, h, rng);
  risk_embed = nn::Linear("sim.risk_embed", 1, h, rng);
  time_embed = nn::Linear("sim.time_embed", k, h, rng);
  risk_head = nn::Linear("sim.risk_head", h, 1, rng);
  time_head = nn::Linear("sim.time_head", h, k, rng);
  status_head = nn::Linear("sim.status_head", h, 1, rng);
}

nn::ParameterList SimulatorModel::parameters() {
  nn::ParameterList out;
  encoder.collect(out);
  decoder.collect(out);
  risk_embed.collect(out);
  time_embed.collect(out);
  risk_head.collect(out);
  time_head.collect(out);
  status_head.collect(out);
  return out;
}

SimulatedStates SimulatorModel::decode(const EncoderTrace& trace) const {
  const nn::LstmState s1 = decoder.forward(trace.z, trace.final_state);
  const nn::Tensor risk_logit = risk_head.forward(s1.h);
  const nn::Tensor risk_prob = nn::sigmoid(risk_logit);

  nn::Tensor x2 = risk_embed.forward(risk_prob);
  if (shape_.reconsume_z) x2 += trace.z;
  const nn::LstmState s2 = decoder.forward(x2, s1);
  const nn::Tensor time_logits = time_head.forward(s2.h);

  nn::Tensor x3 = time_embed.forward(nn::softmax_rows(time_logits));
  if (shape_.reconsume_z) x3 += trace.z;
  const nn::LstmState s3 = decoder.forward(x3, s2);
  const nn::Tensor status_logit = status_head.forward(s3.h);

  SimulatedStates out = heads_to_states(risk_logit, time_logits, status_logit);
  out.decoder_hidden = {s1.h, s2.h, s3.h};
  return out;
}

SimulatedStates SimulatorModel::simulate(const data::OrderFeatures& features, std::span<const int> modes) const {
  check_batch(features, modes, shape_);
  return decode(encoder.forward(features, modes));
}

double SimulatorModel::run(const data::EncodedDataset& batch, bool backward) {
  check_batch(batch.features, batch.modes, shape_);
  const std::size_t n = batch.size();
  Pass p;
  p.trace = encoder.forward(batch.features, batch.modes, nullptr, backward ? &p.enc : nullptr);
  p.s1 = decoder.forward(p.trace.z, p.trace.final_state, &p.steps[0]);
  const nn::Tensor risk_logit = risk_head.forward(p.s1.h);
  p.risk_prob = flat(nn::sigmoid(risk_logit));

  p.risk_in = column(std::span<const int>(batch.risk));
  nn::Tensor x2 = risk_embed.forward(p.risk_in);
  if (shape_.reconsume_z) x2 += p.trace.z;
  p.s2 = decoder.forward(x2, p.s1, &p.steps[1]);
  p.time_probs = nn::softmax_rows(time_head.forward(p.s2.h));

  p.time_in = batch.time_onehot;
  nn::Tensor x3 = time_embed.forward(p.time_in);
  if (shape_.reconsume_z) x3 += p.trace.z;
  p.s3 = decoder.forward(x3, p.s2, &p.steps[2]);
  p.status_prob = flat(nn::sigmoid(status_head.forward(p.s3.h)));

  const double value =
      state_loss(p.risk_prob, p.time_probs, p.status_prob, batch.risk, batch.time_class, batch.status);
  if (!backward) return value;

  const std::size_t h = shape_.hidden_dim;
  nn::Tensor dz = nn::Tensor::matrix(n, h);

  const nn::Tensor dh3 = status_head.backward(p.s3.h, binary_head_grad(p.status_prob, batch.status));
  nn::LstmGrads g3 = decoder.backward(p.steps[2], dh3, nn::Tensor::matrix(n, h));
  time_embed.backward(p.time_in, g3.dx);
  if (shape_.reconsume_z) dz += g3.dx;

  nn::Tensor dh2 = time_head.backward(p.s2.h, time_head_grad(p.time_probs, batch.time_onehot));
  dh2 += g3.dh_prev;
  nn::LstmGrads g2 = decoder.backward(p.steps[1], dh2, g3.dc_prev);
  risk_embed.backward(p.risk_in, g2.dx);
  if (shape_.reconsume_z) dz += g2.dx;

  nn::Tensor dh1 = risk_head.backward(p.s1.h, binary_head_grad(p.risk_prob, batch.risk));
  dh1 += g2.dh_prev;
  nn::LstmGrads g1 = decoder.backward(p.steps[0], dh1, g2.dc_prev);
  dz += g1.dx;

  // z is the encoder's final hidden state, which also seeds the decoder state.
  nn::Tensor dh_enc = std::move(g1.dh_prev);
  dh_enc += dz;
  encoder.backward(p.enc, dh_enc, g1.dc_prev);
  return value;
}

double SimulatorModel::loss(const data::EncodedDataset& batch) const {
  // run() only mutates parameter gradients, and only when backward is requested.
  return const_cast<SimulatorModel*>(this)->run(batch, false);
}

double SimulatorModel::loss_and_backward(const data::EncodedDataset& batch) { return run(batch, true); }

// ---------------------------------------------------------------------------
// One-step generation baseline

GenerationModel::GenerationModel(const ModelShape& shape, std::uint64_t seed) : shape_(shape) {
  nn::Rng rng(seed);
  const std::size_t h = shape.hidden_dim;
  encoder = OrderEncoder("gen.encoder", shape, rng);
  decoder = nn::LstmCell("gen.decoder", h, h, rng);
  risk_head = nn::Linear("gen.risk_head", h, 1, rng);
  time_head = nn::Linear("gen.time_head", h, static_cast<std::size_t>(shape.n_time_classes), rng);
  status_head = nn::Linear("gen.status_head", h, 1, rng);
}

nn::ParameterList GenerationModel::parameters() {
  nn::ParameterList out;
  encoder.collect(out);
  decoder.collect(out);
  risk_head.collect(out);
  time_head.collect(out);
  status_head.collect(out);
  return out;
}

SimulatedStates GenerationModel::simulate(const data::OrderFeatures& features, std::span<const int> modes) const {
  check_batch(features, modes, shape_);
  const EncoderTrace trace = encoder.forward(features, modes);
  const nn::LstmState s = decoder.forward(trace.z, trace.final_state);
  SimulatedStates out = heads_to_states(risk_head.forward(s.h), time_head.forward(s.h), status_head.forward(s.h));
  out.decoder_hidden = {s.h};
  return out;
}

double GenerationModel::run(const data::EncodedDataset& batch, bool backward) {
  check_batch(batch.features, batch.modes, shape_);
  EncoderCache enc;
  const EncoderTrace trace = encoder.forward(batch.features, batch.modes, nullptr, backward ? &enc : nullptr);
  nn::LstmCache step;
  const nn::LstmState s = decoder.forward(trace.z, trace.final_state, &step);
  const std::vector<double> risk_prob = flat(nn::sigmoid(risk_head.forward(s.h)));
  const nn::Tensor time_probs = nn::softmax_rows(time_head.forward(s.h));
  const std::vector<double> status_prob = flat(nn::sigmoid(status_head.forward(s.h)));
  const double value = state_loss(risk_prob, time_probs, status_prob, batch.risk, batch.time_class, batch.status);
  if (!backward) return value;

  nn::Tensor dh = risk_head.backward(s.h, binary_head_grad(risk_prob, batch.risk));
  dh += time_head.backward(s.h, time_head_grad(time_probs, batch.time_onehot));
  dh += status_head.backward(s.h, binary_head_grad(status_prob, batch.status));
  nn::LstmGrads g = decoder.backward(step, dh, nn::Tensor::matrix(batch.size(), shape_.hidden_dim));
  nn::Tensor dh_enc = std::move(g.dh_prev);
  dh_enc += g.dx;
  encoder.backward(enc, dh_enc, g.dc_prev);
  return value;
}

double GenerationModel::loss(const data::EncodedDataset& batch) const {
  return const_cast<GenerationModel*>(this)->run(batch, false);
}

double GenerationModel::loss_and_backward(const data::EncodedDataset& batch) { return run(batch, true); }

// ---------------------------------------------------------------------------
// Multi-task prediction baseline

PredictionModel::PredictionModel(const ModelShape& shape, std::uint64_t seed) : shape_(shape) {
  nn::Rng rng(seed);
  std::size_t in = static_cast<std::size_t>(shape.n_modes);
  for (std::size_t d : shape.group_dims) in += d;
  const std::size_t h = shape.hidden_dim;
  const std::size_t hidden[] = {h};
  trunk = nn::Mlp("pred.trunk", in, hidden, h, rng);
  risk_head = nn::Linear("pred.risk_head", h, 1, rng);
  time_head = nn::Linear("pred.time_head", h, static_cast<std::size_t>(shape.n_time_classes), rng);
  status_head = nn::Linear("pred.status_head", h, 1, rng);
}

nn::ParameterList PredictionModel::parameters() {
  nn::ParameterList out;
  trunk.collect(out);
  risk_head.collect(out);
  time_head.collect(out);
  status_head.collect(out);
  return out;
}

nn::Tensor PredictionModel::inputs(const data::OrderFeatures& features, std::span<const int> modes) const {
  check_batch(features, modes, shape_);
  nn::Tensor onehot = nn::Tensor::matrix(modes.size(), static_cast<std::size_t>(shape_.n_modes));
  for (std::size_t i = 0; i < modes.size(); ++i) onehot(i, static_cast<std::size_t>(modes[i])) = 1.0;
  const nn::Tensor* parts[] = {&features.groups[0], &features.groups[1], &features.groups[2], &features.groups[3],
                               &onehot};
  return nn::concat_columns(parts);
}

SimulatedStates PredictionModel::simulate(const data::OrderFeatures& features, std::span<const int> modes) const {
  const nn::Tensor h = nn::tanh(trunk.forward(inputs(features, modes)));
  return heads_to_states(risk_head.forward(h), time_head.forward(h), status_head.forward(h));
}

double PredictionModel::run(const data::EncodedDataset& batch, bool backward) {
  nn::Mlp::Trace trace;
  const nn::Tensor h = nn::tanh(trunk.forward(inputs(batch.features, batch.modes), &trace));
  const std::vector<double> risk_prob = flat(nn::sigmoid(risk_head.forward(h)));
  const nn::Tensor time_probs = nn::softmax_rows(time_head.forward(h));
  const std::vector<double> status_prob = flat(nn::sigmoid(status_head.forward(h)));
  const double value = state_loss(risk_prob, time_probs, status_prob, batch.risk, batch.time_class, batch.status);
  if (!backward) return value;

  nn::Tensor dh = risk_head.backward(h, binary_head_grad(risk_prob, batch.risk));
  dh += time_head.backward(h, time_head_grad(time_probs, batch.time_onehot));
  dh += status_head.backward(h, binary_head_grad(status_prob, batch.status));
  trunk.backward(trace, nn::tanh_backward(h, dh));
  return value;
}

double PredictionModel::loss(const data::EncodedDataset& batch) const {
  return const_cast<PredictionModel*>(this)->run(batch, false);
}

double PredictionModel::loss_and_backward(const data::EncodedDataset& batch) { return run(batch, true); }

// ---------------------------------------------------------------------------

std::unique_ptr<StateModel> make_state_model(const std::string& kind, const ModelShape& shape, std::uint64_t seed) {
  if (kind == "sim2dec") return std::make_unique<SimulatorModel>(shape, seed);
  if (kind == "generation") return std::make_unique<GenerationModel>(shape, seed);
  if (kind == "prediction") return std::make_unique<PredictionModel>(shape, seed);
  throw std::invalid_argument("unknown state model kind '" + kind + "'");
}

std::unique_ptr<StateModel> load_state_model(const std::filesystem::path& path) {
  const nlohmann::json header = nn::read_checkpoint_header(path);
  const nlohmann::json& hyper = header.at("hyper");
  auto model = make_state_model(hyper.at("kind").get<std::string>(), ModelShape::from_json(hyper.at("shape")), 0);
  nn::load_checkpoint(path, model->parameters());
  return model;
}

}  // namespace simdec::sim
