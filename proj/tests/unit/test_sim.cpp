#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "simdec/data/synthetic.hpp"
#include "simdec/nn/grad_check.hpp"
#include "simdec/sim/markov.hpp"
#include "simdec/sim/model.hpp"
#include "simdec/sim/train.hpp"

using namespace simdec;
using namespace simdec::sim;

namespace {

data::EncodedDataset synthetic_encoded(std::size_t n, std::uint64_t seed = 1) {
  data::SyntheticConfig c;
  c.n_orders = n;
  c.seed = seed;
  const data::SyntheticDataset ds = data::generate_synthetic(c);
  std::vector<std::size_t> rows(ds.records.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return data::encode(ds.records, ds.schema, rows);
}

std::vector<std::size_t> first_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

ModelShape small_shape(const data::EncodedDataset& ds, std::size_t e = 8, std::size_t h = 8) {
  return ModelShape::for_dataset(ds, e, h);
}

std::vector<double> values_of(const nn::Tensor& t) { return {t.values().begin(), t.values().end()}; }

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("global pooling averages order summaries") {
  std::array<nn::Tensor, 4> tokens;
  tokens[0] = nn::Tensor::matrix({{1, 2}, {3, 4}});
  tokens[1] = nn::Tensor::matrix({{1, 2}, {3, 4}});
  tokens[2] = nn::Tensor::matrix({{1, 2}, {3, 4}});
  tokens[3] = nn::Tensor::matrix({{1, 2}, {3, 4}});
  const nn::Tensor summaries = order_summaries(tokens);
  CHECK(summaries(0, 0) == 1.0);
  CHECK(summaries(1, 1) == 4.0);
  const nn::Tensor pooled = pool_global(summaries);
  CHECK(pooled[0] == 2.0);
  CHECK(pooled[1] == 3.0);

  tokens[3] = nn::Tensor::matrix({{5, 6}, {7, 8}});
  const nn::Tensor s2 = order_summaries(tokens);
  CHECK(s2(0, 0) == doctest::Approx(2.0));  // (1 + 1 + 1 + 5) / 4
  const nn::Tensor single = pool_global(nn::Tensor::matrix({{0.5, -1}}));
  CHECK(single[0] == 0.5);
}

TEST_CASE("hard decoding rules") {
  CHECK(decode_binary(0.5) == 1);
  CHECK(decode_binary(0.4999) == 0);
  CHECK(decode_binary(0.9) == 1);
  const double scores[] = {0.1, 0.9, 0.9, 0.2};
  CHECK(decode_time(scores) == 2);
  const double single[] = {-3.0};
  CHECK(decode_time(single) == 1);
}

TEST_CASE("state loss recomputes by hand") {
  const double risk_prob[] = {0.8, 0.1};
  const double status_prob[] = {0.3, 0.6};
  const nn::Tensor time_probs = nn::Tensor::matrix({{0.7, 0.2, 0.1}, {0.1, 0.1, 0.8}});
  const int risk[] = {1, 0};
  const int time_class[] = {1, 2};
  const int status[] = {0, 1};
  // order 0: 0.04 + (0.09 + 0.04 + 0.01) + 0.09; order 1: 0.01 + (0.01 + 0.81 + 0.64) + 0.16
  CHECK(state_loss(risk_prob, time_probs, status_prob, risk, time_class, status) ==
        doctest::Approx(0.27 + 1.63).epsilon(1e-12));
}

TEST_CASE("encoder") {
  const data::EncodedDataset ds = synthetic_encoded(40);
  const SimulatorModel model(small_shape(ds), 3);
  const data::EncodedDataset batch = ds.select(first_rows(12));

  SUBCASE("is permutation-equivariant over orders") {
    const EncoderTrace a = model.encode(batch.features, batch.modes);
    std::vector<std::size_t> perm{11, 3, 7, 0, 5, 2, 9, 1, 10, 4, 8, 6};
    const data::EncodedDataset shuffled = batch.select(perm);
    const EncoderTrace b = model.encode(shuffled.features, shuffled.modes);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      for (std::size_t j = 0; j < a.z.cols(); ++j) CHECK(b.z(i, j) == doctest::Approx(a.z(perm[i], j)).epsilon(1e-12));
    }
    for (std::size_t j = 0; j < a.pooled.size(); ++j) CHECK(b.pooled[j] == doctest::Approx(a.pooled[j]).epsilon(1e-12));
  }
  SUBCASE("with all weights zero yields z = 0") {
    SimulatorModel zero(small_shape(ds), 3);
    for (nn::Parameter* p : zero.parameters()) p->value.fill(0.0);
    const EncoderTrace t = zero.encode(batch.features, batch.modes);
    for (double v : t.z.values()) CHECK(v == 0.0);
  }
  SUBCASE("a supplied pooling vector replaces the batch mean") {
    const nn::Tensor zeros = nn::Tensor::vector(model.shape().embed_dim);
    const EncoderTrace t = model.encode(batch.features, batch.modes, &zeros);
    for (double v : t.pooled.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("inference outputs are well formed and deterministic") {
  const data::EncodedDataset ds = synthetic_encoded(30);
  for (const std::string kind : {"sim2dec", "generation", "prediction"}) {
    CAPTURE(kind);
    const auto model = make_state_model(kind, small_shape(ds), 5);
    const SimulatedStates a = model->simulate(ds.features, ds.modes);
    const SimulatedStates b = model->simulate(ds.features, ds.modes);
    REQUIRE(a.size() == ds.size());
    CHECK(a.risk_prob == b.risk_prob);
    CHECK(a.status_prob == b.status_prob);
    CHECK(values_of(a.time_probs) == values_of(b.time_probs));
    for (std::size_t i = 0; i < a.size(); ++i) {
      double sum = 0.0;
      for (double p : a.time_probs.row(i)) sum += p;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(a.risk[i] == decode_binary(a.risk_prob[i]));
      CHECK(a.time_class[i] == decode_time(a.time_scores.row(i)));
      CHECK(a.time_class[i] >= 1);
      CHECK(a.time_class[i] <= ds.n_time_classes);
    }
    const auto same_seed = make_state_model(kind, small_shape(ds), 5);
    CHECK(same_seed->loss(ds) == model->loss(ds));
  }
}

TEST_CASE("loss of models without teacher forcing equals the loss of their predictions") {
  const data::EncodedDataset ds = synthetic_encoded(25);
  for (const std::string kind : {"generation", "prediction"}) {
    CAPTURE(kind);
    const auto model = make_state_model(kind, small_shape(ds), 2);
    const SimulatedStates s = model->simulate(ds.features, ds.modes);
    const double recomputed = state_loss(s.risk_prob, s.time_probs, s.status_prob, ds.risk, ds.time_class, ds.status);
    CHECK(std::abs(model->loss(ds) - recomputed) < 1e-9);
  }
}

TEST_CASE("simulator risk step does not depend on the teacher values") {
  const data::EncodedDataset ds = synthetic_encoded(20);
  SimulatorModel model(small_shape(ds), 4);
  data::EncodedDataset flipped = ds;
  for (int& r : flipped.risk) r = 1 - r;
  // Changing the teacher risk moves the loss through the later steps only.
  CHECK(model.loss(ds) != model.loss(flipped));
  const SimulatedStates a = model.simulate(ds.features, ds.modes);
  const SimulatedStates b = model.simulate(flipped.features, flipped.modes);
  CHECK(a.risk_prob == b.risk_prob);
}

TEST_CASE("end-to-end gradients match finite differences") {
  const data::EncodedDataset ds = synthetic_encoded(20);
  const data::EncodedDataset batch = ds.select(first_rows(4));
  for (const bool reconsume : {false, true}) {
    for (const std::string kind : {"sim2dec", "generation", "prediction"}) {
      CAPTURE(kind);
      CAPTURE(reconsume);
      ModelShape shape = small_shape(ds);
      shape.reconsume_z = reconsume;
      const auto model = make_state_model(kind, shape, 9);
      nn::GradCheckOptions opts;
      opts.tolerance = 1e-3;
      const nn::GradCheckReport r = nn::grad_check(
          model->parameters(), [&] { return model->loss(batch); }, [&] { model->loss_and_backward(batch); }, opts);
      CHECK_MESSAGE(r.passed, r.worst_location, " ", r.max_relative_error, " ", r.failure);
      CHECK(r.coordinates_checked > 100);
    }
  }
}

TEST_CASE("prediction heads are independent") {
  const data::EncodedDataset ds = synthetic_encoded(15);
  PredictionModel model(small_shape(ds), 6);
  const SimulatedStates before = model.simulate(ds.features, ds.modes);
  model.risk_head.weight.value.fill(0.3);
  model.risk_head.bias.value.fill(-2.0);
  const SimulatedStates after = model.simulate(ds.features, ds.modes);
  CHECK(before.risk_prob != after.risk_prob);
  CHECK(values_of(before.time_probs) == values_of(after.time_probs));
  CHECK(before.status_prob == after.status_prob);
}

TEST_CASE("markov chain counting") {
  data::EncodedDataset ds;
  ds.n_modes = 2;
  ds.n_time_classes = 3;
  // mode 0: (risk, days, status) = (1,1,1), (1,2,0), (0,2,1), (1,1,1); mode 1 has no rows
  ds.order_ids = {"a", "b", "c", "d"};
  ds.modes = {0, 0, 0, 0};
  ds.risk = {1, 1, 0, 1};
  ds.time_class = {1, 2, 2, 1};
  ds.status = {1, 0, 1, 1};
  const auto rows = first_rows(4);

  SUBCASE("laplace smoothing") {
    const MarkovModel m = MarkovModel::fit(ds, rows, 1.0);
    CHECK(m.p_risk(0) == doctest::Approx(4.0 / 6.0));
    const auto t = m.p_time(0, 1);  // counts (2, 1, 0)
    CHECK(t[0] == doctest::Approx(3.0 / 6.0));
    CHECK(t[1] == doctest::Approx(2.0 / 6.0));
    CHECK(t[2] == doctest::Approx(1.0 / 6.0));
    CHECK(m.p_status(0, 1, 1) == doctest::Approx(3.0 / 4.0));
    CHECK(m.p_risk(1) == doctest::Approx(0.5));
  }
  SUBCASE("every conditional distribution normalizes") {
    const MarkovModel m = MarkovModel::fit(ds, rows, 0.7);
    for (int d = 0; d < 2; ++d) {
      double marginal = 0.0;
      for (double p : m.time_marginal(d)) marginal += p;
      CHECK(marginal == doctest::Approx(1.0));
      for (int r = 0; r < 2; ++r) {
        double s = 0.0;
        for (double p : m.p_time(d, r)) s += p;
        CHECK(s == doctest::Approx(1.0));
      }
    }
  }
  SUBCASE("alpha near zero approaches the empirical frequencies") {
    const MarkovModel m = MarkovModel::fit(ds, rows, 1e-9);
    CHECK(m.p_risk(0) == doctest::Approx(0.75));
    CHECK(m.p_time(0, 1)[0] == doctest::Approx(2.0 / 3.0));
    CHECK(m.p_status(0, 1, 2) == doctest::Approx(0.0).epsilon(1e-6));
    // (mode 0, risk 0, days 1) was never seen: backs off to mode-level status rate.
    CHECK(m.p_status(0, 0, 1) == doctest::Approx(0.75));
  }
  SUBCASE("prediction follows the chain and JSON round trips") {
    const MarkovModel m = MarkovModel::fit(ds, rows, 1.0);
    const int modes[] = {0};
    const SimulatedStates s = m.predict(modes);
    CHECK(s.risk[0] == 1);
    CHECK(s.time_class[0] == 1);
    CHECK(s.status[0] == 1);
    CHECK(MarkovModel::from_json(m.to_json()).to_json() == m.to_json());
  }
}

TEST_CASE("training reduces the loss and is reproducible") {
  const data::EncodedDataset ds = synthetic_encoded(300);
  const data::EncodedDataset train = ds.select(first_rows(240));
  std::vector<std::size_t> val_rows;
  for (std::size_t i = 240; i < 300; ++i) val_rows.push_back(i);
  const data::EncodedDataset val = ds.select(val_rows);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.batch_size = 64;
  cfg.lr = 1e-2;
  SimulatorModel a(small_shape(ds), 1), b(small_shape(ds), 1);
  const TrainResult ra = train_state_model(a, train, val, cfg);
  const TrainResult rb = train_state_model(b, train, val, cfg);
  REQUIRE(ra.curve.size() == 6);
  CHECK(ra.curve[5].train_loss < ra.curve[0].train_loss);
  CHECK(ra.to_json() == rb.to_json());
  CHECK(a.loss(val) == b.loss(val));
}

TEST_CASE("balanced chunks cover the order set") {
  const auto rows = first_rows(257);
  const auto chunks = balanced_chunks(rows, 128);
  REQUIRE(chunks.size() == 3);
  std::size_t total = 0;
  for (const auto& c : chunks) {
    CHECK(c.size() >= 85);
    CHECK(c.size() <= 86);
    total += c.size();
  }
  CHECK(total == 257);
}

TEST_CASE("state model checkpoints round trip") {
  const data::EncodedDataset ds = synthetic_encoded(20);
  const auto path = std::filesystem::temp_directory_path() / "simdec_sim_ckpt.bin";
  for (const std::string kind : {"sim2dec", "generation", "prediction"}) {
    ModelShape shape = small_shape(ds);
    shape.reconsume_z = true;
    const auto model = make_state_model(kind, shape, 8);
    model->save(path);
    const auto loaded = load_state_model(path);
    CHECK(loaded->kind() == kind);
    CHECK(loaded->shape().to_json() == shape.to_json());
    CHECK(loaded->loss(ds) == model->loss(ds));
    const auto bytes = file_bytes(path);
    loaded->save(path);
    CHECK(file_bytes(path) == bytes);
  }
}
