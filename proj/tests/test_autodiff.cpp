#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "graphrank/losses.hpp"
#include "graphrank/optimizer.hpp"
#include "graphrank/param_store.hpp"
#include "graphrank/rng.hpp"
#include "graphrank/tape.hpp"
#include "test_support.hpp"

using namespace graphrank;
using testsupport::check_gradients;
using testsupport::random_tensor;

TEST_CASE("matmul forward values") {
  Tape tape;
  auto a = tape.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  auto b = tape.constant(Tensor::matrix(3, 2, {7, 8, 9, 10, 11, 12}));
  auto c = tape.matmul(a, b);
  const Tensor& v = tape.value(c);
  CHECK(v.at(0, 0) == 58);
  CHECK(v.at(0, 1) == 64);
  CHECK(v.at(1, 0) == 139);
  CHECK(v.at(1, 1) == 154);
  CHECK_THROWS_AS(tape.matmul(a, a), ShapeError);
}

TEST_CASE("quadratic loss gradient equals 8 at W=1") {
  // loss = mean((W x - y)^2), W = [[1]], x = [2], y = [0]
  ParamStore store;
  store.insert("W", Tensor::matrix(1, 1, {1.0}));
  Tape tape;
  Binder binder(tape, store);
  auto x = tape.constant(Tensor::matrix(1, 1, {2.0}));
  auto y = tape.constant(Tensor::matrix(1, 1, {0.0}));
  auto loss = tape.reduce_mean(tape.square(tape.sub(tape.matmul(x, binder("W")), y)));
  CHECK(tape.value(loss)[0] == 4.0);
  tape.backward(loss);
  binder.write_grads();
  CHECK(store.grad("W")[0] == 8.0);
}

TEST_CASE("gradient of unused parameter is exactly zero") {
  ParamStore store;
  store.insert("used", Tensor::matrix(1, 1, {3.0}));
  store.insert("unused", Tensor::matrix(4, 4, {
      1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1}));
  Tape tape;
  Binder binder(tape, store);
  auto x = tape.constant(Tensor::matrix(1, 1, {2.0}));
  binder("unused");
  auto loss = tape.reduce_mean(tape.square(tape.matmul(x, binder("used"))));
  tape.backward(loss);
  binder.write_grads();
  for (std::size_t i = 0; i < 16; ++i) CHECK(store.grad("unused")[i] == 0.0);
  CHECK(store.grad("used")[0] != 0.0);
}

TEST_CASE("segment reductions forward") {
  Tape tape;
  auto x = tape.constant(Tensor::matrix(2, 1, {1, 3}));
  SECTION("sum") {
    auto s = tape.segment_sum(x, {0, 0}, 1);
    CHECK(tape.value(s)[0] == 4.0);
  }
  SECTION("mean") {
    auto m = tape.segment_mean(x, {0, 0}, 1);
    CHECK(tape.value(m)[0] == 2.0);
  }
  SECTION("softmax over a single-row group is identity") {
    auto xr = tape.constant(Tensor::matrix(1, 3, {1.5, -2.0, 0.25}));
    auto score = tape.constant(Tensor::matrix(1, 1, {0.7}));
    auto p = tape.segment_softmax_pool(xr, score, {0}, 1);
    const Tensor& v = tape.value(p);
    CHECK(v.at(0, 0) == 1.5);
    CHECK(v.at(0, 1) == -2.0);
    CHECK(v.at(0, 2) == 0.25);
  }
  SECTION("empty group rejected") {
    CHECK_THROWS_AS(tape.segment_sum(x, {0, 0}, 2), ShapeError);
    CHECK_THROWS_AS(tape.segment_sum(x, {1, 1}, 2), ShapeError);
  }
}

TEST_CASE("segment_sum equals matmul with the indicator matrix") {
  Rng rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t groups = 1 + rng.index(4);
    std::vector<std::size_t> seg;
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t count = 1 + rng.index(4);
      for (std::size_t i = 0; i < count; ++i) seg.push_back(g);
    }
    const std::size_t rows = seg.size();
    const std::size_t d = 1 + rng.index(3);
    Tensor x = random_tensor({rows, d}, rng);
    Tensor indicator({groups, rows});
    for (std::size_t i = 0; i < rows; ++i) indicator.at(seg[i], i) = 1.0;

    Tape tape;
    auto xv = tape.constant(x);
    auto via_segment = tape.segment_sum(xv, seg, groups);
    auto via_matmul = tape.matmul(tape.constant(indicator), xv);
    const Tensor& a = tape.value(via_segment);
    const Tensor& b = tape.value(via_matmul);
    REQUIRE(a.same_shape(b));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == Catch::Approx(b[i]).margin(1e-12));
  }
}

TEST_CASE("gather, scale and edge aggregation forward") {
  Tape tape;
  auto x = tape.constant(Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}));
  auto g = tape.gather_rows(x, {2, 0, 2});
  CHECK(tape.value(g).at(0, 0) == 5);
  CHECK(tape.value(g).at(1, 1) == 2);
  CHECK(tape.value(g).at(2, 1) == 6);

  auto s = tape.scale_rows(x, {2.0, 0.0, -1.0});
  CHECK(tape.value(s).at(0, 1) == 4);
  CHECK(tape.value(s).at(1, 0) == 0);
  CHECK(tape.value(s).at(2, 0) == -5);

  // two directed edges 0->1 and 2->1 with weights 1 and 0.5
  auto agg = tape.edge_aggregate(x, {0, 2}, {1, 1}, {1.0, 0.5}, 3);
  CHECK(tape.value(agg).at(1, 0) == 1.0 + 2.5);
  CHECK(tape.value(agg).at(0, 0) == 0.0);
}

TEST_CASE("bce_with_logits matches the plain loss and known values") {
  SECTION("logit 0, label 1 gives ln 2") {
    Tape tape;
    auto l = tape.input(Tensor::matrix(1, 1, {0.0}));
    auto loss = tape.bce_with_logits(l, {1.0});
    CHECK(tape.value(loss)[0] == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  }
  SECTION("large logit, label 1 drives loss to zero") {
    Tape tape;
    auto l = tape.input(Tensor::matrix(1, 1, {40.0}));
    auto loss = tape.bce_with_logits(l, {1.0});
    CHECK(tape.value(loss)[0] < 1e-12);
  }
  SECTION("tape op and plain function agree bitwise") {
    Rng rng(5);
    std::vector<double> logits, labels;
    for (int i = 0; i < 17; ++i) {
      logits.push_back(rng.uniform(-8.0, 8.0));
      labels.push_back(rng.uniform() < 0.5 ? 0.0 : 1.0);
    }
    Tensor lt({logits.size(), 1});
    for (std::size_t i = 0; i < logits.size(); ++i) lt[i] = logits[i];
    Tape tape;
    auto loss = tape.bce_with_logits(tape.input(lt), labels);
    CHECK(tape.value(loss)[0] == pairwise_loss(logits, labels));
  }
  SECTION("gradient w.r.t. logits is (p - y) / n") {
    Tape tape;
    Tensor lt = Tensor::matrix(2, 1, {0.3, -1.2});
    auto l = tape.input(lt);
    auto loss = tape.bce_with_logits(l, {1.0, 0.0});
    tape.backward(loss);
    const Tensor& g = tape.grad(l);
    CHECK(g[0] == Catch::Approx((logistic(0.3) - 1.0) / 2.0).epsilon(1e-12));
    CHECK(g[1] == Catch::Approx((logistic(-1.2) - 0.0) / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("non-finite values are detected") {
  Tape tape;
  auto x = tape.constant(Tensor::matrix(1, 1, {710.0}));
  // exp(710) overflows in the sigmoid's denominator only for -710; use a
  // square chain to overflow instead
  auto big = tape.constant(Tensor::matrix(1, 1, {1e200}));
  CHECK_THROWS_AS(tape.square(big), NumericError);
  (void)x;
}

TEST_CASE("mlp gradients match central finite differences") {
  // random 3-layer MLP, every parameter vs finite differences
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n_in = 2 + rng.index(3);
    const std::size_t hidden = 2 + rng.index(4);
    const std::size_t rows = 1 + rng.index(5);
    ParamStore store;
    Rng init(derive_seed(1234, "mlp", static_cast<std::uint64_t>(trial)));
    store.add_weight("l1.W", n_in, hidden, {n_in, hidden}, init);
    store.add_bias("l1.b", {hidden});
    store.add_weight("l2.W", hidden, hidden, {hidden, hidden}, init);
    store.add_bias("l2.b", {hidden});
    store.add_weight("l3.W", hidden, 1, {hidden, 1}, init);
    store.values.at("l1.b")[0] = 0.3;  // nonzero biases for a real check
    store.values.at("l2.b")[hidden - 1] = -0.2;

    Tensor x = random_tensor({rows, n_in}, rng);
    Tensor y = random_tensor({rows, 1}, rng);
    auto build = [&](Tape& tape, Binder& p) {
      auto h1 = tape.activation(
          tape.add_bias(tape.matmul(tape.constant(x), p("l1.W")), p("l1.b")),
          Activation::tanh);
      auto h2 = tape.activation(tape.add_bias(tape.matmul(h1, p("l2.W")), p("l2.b")),
                                Activation::sigmoid);
      auto out = tape.matmul(h2, p("l3.W"));
      return tape.reduce_mean(tape.square(tape.sub(out, tape.constant(y))));
    };
    const auto check = check_gradients(store, build);
    INFO("worst: " << check.worst_param << "[" << check.worst_index << "]");
    CHECK(check.max_rel_error <= 1e-4);
  }
}

TEST_CASE("randomized op-graph gradients match finite differences", "[property]") {
  // 100 random computation graphs over the op set
  Rng rng(2024);
  int built = 0;
  while (built < 100) {
    const std::size_t rows = 2 + rng.index(5);
    const std::size_t d0 = 1 + rng.index(4);
    ParamStore store;
    Rng init(derive_seed(400, "opgraph", static_cast<std::uint64_t>(built)));

    Tensor x = random_tensor({rows, d0}, rng);
    std::vector<std::size_t> seg;
    std::size_t groups = 1 + rng.index(3);
    if (groups > rows) groups = rows;
    for (std::size_t i = 0; i < rows; ++i) {
      seg.push_back(std::min(groups - 1, i * groups / rows));
    }

    const int flavor = static_cast<int>(rng.index(6));
    const Activation act = std::vector<Activation>{
        Activation::sigmoid, Activation::tanh, Activation::relu}[rng.index(3)];
    const std::size_t d1 = 1 + rng.index(4);
    store.add_weight("W", d0, d1, {d0, d1}, init);
    store.add_bias("b", {d1});
    store.add_weight("v", d1, 1, {d1, 1}, init);
    for (std::size_t i = 0; i < d1; ++i) store.values.at("b")[i] = init.uniform(-0.5, 0.5);

    std::vector<double> labels;
    for (std::size_t g = 0; g < groups; ++g) labels.push_back(init.uniform() < 0.5 ? 0.0 : 1.0);

    auto build = [&, flavor, act](Tape& tape, Binder& p) {
      auto h = tape.activation(
          tape.add_bias(tape.matmul(tape.constant(x), p("W")), p("b")), act);
      switch (flavor) {
        case 0: {  // segment mean + square
          auto pooled = tape.segment_mean(h, seg, groups);
          return tape.reduce_mean(tape.square(pooled));
        }
        case 1: {  // segment sum + linear readout
          auto pooled = tape.segment_sum(h, seg, groups);
          return tape.reduce_mean(tape.matmul(pooled, p("v")));
        }
        case 2: {  // softmax pooling
          auto scores = tape.matmul(h, p("v"));
          auto pooled = tape.segment_softmax_pool(h, scores, seg, groups);
          return tape.reduce_mean(tape.square(pooled));
        }
        case 3: {  // gather + subtract + bce
          std::vector<std::size_t> ia, ib;
          for (std::size_t g = 0; g < groups; ++g) {
            ia.push_back(rows - 1 - (g % rows));
            ib.push_back(g % rows);
          }
          auto u = tape.matmul(h, p("v"));
          auto logits = tape.sub(tape.gather_rows(u, ia), tape.gather_rows(u, ib));
          return tape.bce_with_logits(logits, labels);
        }
        case 4: {  // scale rows + mean
          std::vector<double> coef;
          for (std::size_t i = 0; i < rows; ++i) coef.push_back(0.25 * (1.0 + (i % 3)));
          return tape.reduce_mean(tape.square(tape.scale_rows(h, coef)));
        }
        default: {  // edge aggregation over a small ring
          std::vector<std::size_t> src, dst;
          std::vector<double> w;
          for (std::size_t i = 0; i < rows; ++i) {
            src.push_back(i);
            dst.push_back((i + 1) % rows);
            w.push_back(0.5 + 0.1 * (i % 4));
          }
          auto aggregated = tape.edge_aggregate(h, src, dst, w, rows);
          return tape.reduce_mean(tape.square(aggregated));
        }
      }
    };
    const auto check = check_gradients(store, build);
    INFO("flavor " << flavor << " worst: " << check.worst_param);
    REQUIRE(check.max_rel_error <= 1e-4);
    ++built;
  }
}

TEST_CASE("forward and backward are deterministic") {
  auto run = [] {
    ParamStore store;
    Rng init(7);
    store.add_weight("W", 3, 3, {3, 3}, init);
    Rng rng(13);
    Tensor x = random_tensor({4, 3}, rng);
    Tape tape;
    Binder binder(tape, store);
    auto h = tape.activation(tape.matmul(tape.constant(x), binder("W")), Activation::sigmoid);
    auto loss = tape.reduce_mean(tape.square(h));
    tape.backward(loss);
    binder.write_grads();
    return std::make_pair(tape.value(loss)[0], store.grad("W").values());
  };
  const auto r1 = run();
  const auto r2 = run();
  CHECK(r1.first == r2.first);
  CHECK(r1.second == r2.second);
}

TEST_CASE("adam optimizer") {
  SECTION("zero gradient leaves parameters unchanged") {
    ParamStore store;
    store.insert("w", Tensor::vector({1.0, -2.0, 3.0}));
    AdamOptimizer adam;
    for (int i = 0; i < 10; ++i) adam.step(store, 1e-2);
    CHECK(store.value("w")[0] == 1.0);
    CHECK(store.value("w")[1] == -2.0);
    CHECK(store.value("w")[2] == 3.0);
  }
  SECTION("first step magnitude is about lr") {
    ParamStore store;
    store.insert("w", Tensor::vector({0.5}));
    store.grad("w")[0] = 3.7;
    AdamOptimizer adam;
    adam.step(store, 1e-2);
    CHECK(0.5 - store.value("w")[0] == Catch::Approx(1e-2).epsilon(1e-6));
  }
  SECTION("quadratic bowl converges") {
    // f(theta) = theta^2, gradient 2 theta
    ParamStore store;
    store.insert("theta", Tensor::vector({1.0}));
    AdamOptimizer adam;
    for (int i = 0; i < 5000; ++i) {
      store.zero_grads();
      store.grad("theta")[0] = 2.0 * store.value("theta")[0];
      adam.step(store, 1e-2);
    }
    CHECK(std::fabs(store.value("theta")[0]) < 1e-3);
  }
}
