#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "simdec/errors.hpp"
#include "simdec/nn/adam.hpp"
#include "simdec/nn/checkpoint.hpp"
#include "simdec/nn/functional.hpp"
#include "simdec/nn/grad_check.hpp"
#include "simdec/nn/layers.hpp"

using namespace simdec;
using namespace simdec::nn;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

/// Fixed random linear functional of a tensor, used to turn outputs into a scalar.
double project(const Tensor& y, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("simdec_test_" + name);
}

}  // namespace

TEST_CASE("tensor construction checks the value count") {
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  const Tensor t = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(t.rows() == 2);
  CHECK(t(1, 0) == 3.0);
}

TEST_CASE("linear layer forward") {
  SUBCASE("identity weights pass the input through") {
    Linear l("id", Tensor::matrix({{1, 0}, {0, 1}}), Tensor::vector(2));
    const Tensor x = Tensor::matrix({{0.3, -2.0}});
    CHECK(l.forward(x) == x);
  }
  SUBCASE("hand computed") {
    Linear l("w", Tensor::matrix({{1, 2}}), Tensor({1}, std::vector<double>{3}));
    const Tensor y = l.forward(Tensor::matrix({{1, 1}}));
    CHECK(y[0] == doctest::Approx(6.0));
  }
  SUBCASE("shape mismatch") {
    Rng rng(1);
    Linear l("w", 3, 2, rng);
    CHECK_THROWS_AS(l.forward(Tensor::matrix(1, 4)), ShapeError);
  }
}

TEST_CASE("linear layer gradients match finite differences on random cases") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t in = 1 + rng.index(5), out = 1 + rng.index(4), batch = 1 + rng.index(4);
    Linear l("lin", in, out, rng);
    Parameter x("x", random_matrix(batch, in, rng));
    const Tensor w = random_matrix(batch, out, rng);
    ParameterList params{&l.weight, &l.bias, &x};
    auto loss = [&] { return project(l.forward(x.value), w); };
    auto backward = [&] { x.grad += l.backward(x.value, w); };
    const GradCheckReport r = grad_check(params, loss, backward);
    CHECK_MESSAGE(r.passed, "seed " << seed << " worst " << r.worst_location << " err " << r.max_relative_error);
  }
}

TEST_CASE("grad_check catches a corrupted backward") {
  Rng rng(3);
  Linear l("lin", 4, 3, rng);
  const Tensor x = random_matrix(2, 4, rng);
  const Tensor w = random_matrix(2, 3, rng);
  ParameterList params{&l.weight, &l.bias};
  auto loss = [&] { return project(l.forward(x), w); };
  Tensor doubled = w;
  doubled *= 2.0;
  auto backward = [&] { l.backward(x, doubled); };
  const GradCheckReport r = grad_check(params, loss, backward);
  CHECK_FALSE(r.passed);
  CHECK(r.max_relative_error > 0.3);
}

TEST_CASE("grad_check reports non-finite losses") {
  Parameter p("p", Tensor::vector(1, 1.0));
  ParameterList params{&p};
  const GradCheckReport r = grad_check(
      params, [] { return std::nan(""); }, [] {});
  CHECK_FALSE(r.passed);
  CHECK_FALSE(r.failure.empty());
}

TEST_CASE("embedding lookup and gradient") {
  Rng rng(1);
  Embedding e("emb", 2, 2, rng);
  e.table.value = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(e.lookup(1) == Tensor({2}, std::vector<double>{3, 4}));
  CHECK_THROWS_AS(e.lookup(2), std::out_of_range);
  CHECK_THROWS_AS(e.lookup(-1), std::out_of_range);

  const int one[] = {1};
  e.backward(one, Tensor::matrix({{0.5, -1}}));
  CHECK(e.table.grad(0, 0) == 0.0);
  CHECK(e.table.grad(0, 1) == 0.0);
  CHECK(e.table.grad(1, 0) == 0.5);

  const int twice[] = {1, 1};
  e.table.zero_grad();
  e.backward(twice, Tensor::matrix({{0.5, -1}, {0.5, -1}}));
  CHECK(e.table.grad(1, 0) == doctest::Approx(1.0));
  CHECK(e.table.grad(1, 1) == doctest::Approx(-2.0));
}

TEST_CASE("embedding gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Embedding e("emb", 2 + rng.index(4), 1 + rng.index(4), rng);
    std::vector<int> idx(1 + rng.index(5));
    for (int& i : idx) i = static_cast<int>(rng.index(e.rows()));
    const Tensor w = random_matrix(idx.size(), e.dim(), rng);
    ParameterList params{&e.table};
    const GradCheckReport r = grad_check(
        params, [&] { return project(e.forward(idx), w); }, [&] { e.backward(idx, w); });
    CHECK_MESSAGE(r.passed, "seed " << seed);
  }
}

TEST_CASE("lstm step analytic cases") {
  Rng rng(2);
  LstmCell cell("cell", 3, 4, rng);
  SUBCASE("zero weights give a zero hidden state") {
    cell.w_input.value.fill(0.0);
    cell.w_hidden.value.fill(0.0);
    cell.bias.value.fill(0.0);
    const LstmState s = cell.forward(random_matrix(2, 3, rng), cell.zero_state(2));
    for (double v : s.h.values()) CHECK(v == 0.0);
  }
  SUBCASE("hidden entries stay inside (-1, 1)") {
    for (double& v : cell.w_input.value.values()) v *= 50.0;
    Tensor x = random_matrix(3, 3, rng);
    x *= 10.0;
    const LstmState s = cell.forward(x, cell.zero_state(3));
    for (double v : s.h.values()) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  }
  SUBCASE("shape mismatch") { CHECK_THROWS_AS(cell.forward(Tensor::matrix(2, 5), cell.zero_state(2)), ShapeError); }
}

TEST_CASE("lstm backpropagation through time matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    const std::size_t in = 1 + rng.index(4), hid = 1 + rng.index(4), batch = 1 + rng.index(3);
    LstmCell cell("cell", in, hid, rng);
    std::vector<Parameter> xs;
    for (int t = 0; t < 3; ++t) xs.emplace_back("x" + std::to_string(t), random_matrix(batch, in, rng));
    const Tensor wh = random_matrix(batch, hid, rng);
    const Tensor wc = random_matrix(batch, hid, rng);
    ParameterList params{&cell.w_input, &cell.w_hidden, &cell.bias};
    for (Parameter& x : xs) params.push_back(&x);

    auto loss = [&] {
      LstmState s = cell.zero_state(batch);
      for (const Parameter& x : xs) s = cell.forward(x.value, s);
      return project(s.h, wh) + project(s.c, wc);
    };
    auto backward = [&] {
      std::vector<LstmCache> caches(xs.size());
      LstmState s = cell.zero_state(batch);
      for (std::size_t t = 0; t < xs.size(); ++t) s = cell.forward(xs[t].value, s, &caches[t]);
      Tensor dh = wh, dc = wc;
      for (std::size_t t = xs.size(); t-- > 0;) {
        LstmGrads g = cell.backward(caches[t], dh, dc);
        xs[t].grad += g.dx;
        dh = g.dh_prev;
        dc = g.dc_prev;
      }
    };
    const GradCheckReport r = grad_check(params, loss, backward);
    CHECK_MESSAGE(r.passed, "seed " << seed << " worst " << r.worst_location << " err " << r.max_relative_error);
  }
}

TEST_CASE("mlp gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(200 + seed);
    const std::size_t hidden[] = {1 + rng.index(5), 1 + rng.index(5)};
    Mlp mlp("mlp", 3, hidden, 2, rng);
    Parameter x("x", random_matrix(2, 3, rng));
    const Tensor w = random_matrix(2, 2, rng);
    ParameterList params;
    mlp.collect(params);
    params.push_back(&x);
    auto backward = [&] {
      Mlp::Trace trace;
      mlp.forward(x.value, &trace);
      x.grad += mlp.backward(trace, w);
    };
    const GradCheckReport r = grad_check(params, [&] { return project(mlp.forward(x.value), w); }, backward);
    CHECK_MESSAGE(r.passed, "seed " << seed);
  }
}

TEST_CASE("activation gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(300 + seed);
    Parameter x("x", random_matrix(2, 1 + rng.index(5), rng));
    const Tensor w = random_matrix(x.value.rows(), x.value.cols(), rng);
    ParameterList params{&x};
    CHECK(grad_check(
              params, [&] { return project(sigmoid(x.value), w); },
              [&] { x.grad += sigmoid_backward(sigmoid(x.value), w); })
              .passed);
    CHECK(grad_check(
              params, [&] { return project(nn::tanh(x.value), w); },
              [&] { x.grad += tanh_backward(nn::tanh(x.value), w); })
              .passed);
    CHECK(grad_check(
              params, [&] { return project(softmax_rows(x.value), w); },
              [&] { x.grad += softmax_rows_backward(softmax_rows(x.value), w); })
              .passed);
  }
}

TEST_CASE("mse loss is a sum of squares") {
  CHECK(mse_loss(Tensor::matrix({{1, 2}}), Tensor::matrix({{1, 2}})).value == 0.0);
  const MseResult r = mse_loss(Tensor::matrix({{1, 2}}), Tensor::matrix({{0, 0}}));
  CHECK(r.value == doctest::Approx(5.0));
  CHECK(r.grad(0, 1) == doctest::Approx(4.0));
  CHECK_THROWS_AS(mse_loss(Tensor::matrix(1, 2), Tensor::matrix(2, 1)), ShapeError);

  Rng rng(4);
  Parameter p("p", random_matrix(3, 2, rng));
  const Tensor target = random_matrix(3, 2, rng);
  ParameterList params{&p};
  GradCheckOptions opts;
  opts.tolerance = 1e-6;
  const GradCheckReport g = grad_check(
      params, [&] { return mse_loss(p.value, target).value; }, [&] { p.grad += mse_loss(p.value, target).grad; },
      opts);
  CHECK_MESSAGE(g.passed, g.max_relative_error);
}

TEST_CASE("adam step") {
  SUBCASE("zero gradient and no decay is a fixed point") {
    Parameter p("p", Tensor::vector(3, 0.7));
    adam_step({&p}, AdamConfig{});
    for (double v : p.value.values()) CHECK(v == 0.7);
    CHECK(p.step_count == 1);
  }
  SUBCASE("first bias-corrected step moves by about lr") {
    Parameter p("p", Tensor::vector(1, 1.0));
    p.grad[0] = 1.0;
    AdamConfig c;
    c.lr = 0.1;
    adam_step({&p}, c);
    // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps).
    CHECK(p.value[0] == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(p.grad[0] == 0.0);
  }
  SUBCASE("decay shrinks magnitude with zero gradient") {
    Parameter p("p", Tensor({2}, std::vector<double>{2.0, -3.0}));
    AdamConfig c;
    c.weight_decay = 0.1;
    adam_step({&p}, c);
    CHECK(std::abs(p.value[0]) < 2.0);
    CHECK(std::abs(p.value[1]) < 3.0);
  }
}

TEST_CASE("gumbel softmax") {
  SUBCASE("dominant logit with frozen noise") {
    const Tensor scores({4}, std::vector<double>{5, 0, 0, 0});
    const GumbelSample s = gumbel_softmax_with_noise(scores, Tensor::vector(4), 0.1, false);
    CHECK(s.output[0] == doctest::Approx(1.0).epsilon(1e-3));
    for (int i = 1; i < 4; ++i) CHECK(s.output[static_cast<std::size_t>(i)] < 1e-3);
  }
  SUBCASE("outputs are probability vectors") {
    Rng rng(9);
    for (int t = 0; t < 1000; ++t) {
      Tensor scores = random_matrix(1, 2 + rng.index(6), rng);
      scores *= 10.0 * rng.uniform();
      const double tau = 0.05 + 3.0 * rng.uniform();
      const GumbelSample s = gumbel_softmax(scores, tau, rng, false);
      const double sum = std::accumulate(s.output.values().begin(), s.output.values().end(), 0.0);
      CHECK(std::abs(sum - 1.0) < 1e-6);
      for (double v : s.output.values()) CHECK(v >= 0.0);
    }
  }
  SUBCASE("hard samples are one-hot") {
    Rng rng(1);
    const GumbelSample s = gumbel_softmax(Tensor::matrix({{0.2, 0.5, 0.1}}), 0.5, rng, true);
    CHECK(std::accumulate(s.output.values().begin(), s.output.values().end(), 0.0) == 1.0);
    CHECK(s.output(0, static_cast<std::size_t>(s.index[0])) == 1.0);
  }
  SUBCASE("argmax frequencies at tau = 1 follow softmax of the scores") {
    Rng rng(12);
    const Tensor scores = Tensor::matrix({{0.5, -0.3, 1.2, 0.0}});
    const Tensor expected = softmax_rows(scores);
    std::vector<double> freq(4, 0.0);
    const int draws = 100000;
    for (int t = 0; t < draws; ++t) ++freq[static_cast<std::size_t>(gumbel_softmax(scores, 1.0, rng, true).index[0])];
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(freq[i] / draws - expected[i]) < 1e-2);
  }
  SUBCASE("temperature must be positive") {
    Rng rng(1);
    CHECK_THROWS_AS(gumbel_softmax(Tensor::matrix({{1, 2}}), 0.0, rng, false), std::invalid_argument);
  }
  SUBCASE("straight-through gradient matches the soft sample's finite differences") {
    Rng rng(5);
    Parameter scores("scores", random_matrix(2, 4, rng));
    Tensor noise = Tensor::matrix(2, 4);
    for (double& v : noise.values()) v = rng.gumbel();
    const Tensor w = random_matrix(2, 4, rng);
    ParameterList params{&scores};
    auto loss = [&] { return project(gumbel_softmax_with_noise(scores.value, noise, 0.7, false).soft, w); };
    auto backward = [&] {
      scores.grad += gumbel_softmax_backward(gumbel_softmax_with_noise(scores.value, noise, 0.7, true), w);
    };
    CHECK(grad_check(params, loss, backward).passed);
  }
}

TEST_CASE("rng streams are reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
  Rng c = Rng::derive(42, 1), d = Rng::derive(42, 1), e = Rng::derive(42, 2);
  CHECK(c.next() == d.next());
  CHECK(c.next() != e.next());
}

TEST_CASE("checkpoint round trip") {
  Rng rng(6);
  Linear a("layer", 3, 2, rng);
  Linear b("layer", 3, 2, rng);
  ParameterList pa, pb;
  a.collect(pa);
  b.collect(pb);
  const auto path = temp_path("ckpt.bin");
  save_checkpoint(path, pa, {{"note", "x"}});
  const nlohmann::json header = read_checkpoint_header(path);
  CHECK(header.at("format_version") == kCheckpointFormatVersion);
  CHECK(load_checkpoint(path, pb).at("note") == "x");
  CHECK(a.weight.value == b.weight.value);
  CHECK(a.bias.value == b.bias.value);

  Linear wrong("layer", 4, 2, rng);
  ParameterList pw;
  wrong.collect(pw);
  CHECK_THROWS(load_checkpoint(path, pw));

  std::ifstream in(path, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  CHECK(std::string(magic, 8) == "SDCKPT01");
  std::filesystem::remove(path);
}
