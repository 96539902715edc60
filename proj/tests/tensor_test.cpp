#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "acp/tensor.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace acp;

namespace {

Tensor leaf(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t = Tensor::glorot(shape, rng);
  return t;
}

}  // namespace

TEST_CASE("matmul forward matches a naive oracle") {
  Rng rng(1);
  Tensor a = leaf({3, 4}, rng);
  Tensor b = leaf({4, 2}, rng);
  Tensor c = matmul(a, b);
  REQUIRE(c.shape() == std::vector<std::size_t>{3, 2});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k)
        s += a.values()[i * 4 + k] * b.values()[k * 2 + j];
      CHECK(c.values()[i * 2 + j] == doctest::Approx(s).epsilon(1e-12));
    }
  CHECK_THROWS(matmul(a, a));
}

TEST_CASE("softmax rows are row-stochastic") {
  Rng rng(2);
  Tensor a = leaf({5, 7}, rng);
  Tensor s = softmax_rows(a);
  for (std::size_t i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 7; ++j) {
      double v = s.values()[i * 7 + j];
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("log_softmax is stable for large inputs") {
  Tensor a = Tensor::from({3}, {1000.0, 1001.0, 1002.0});
  Tensor ls = log_softmax_vec(a);
  double z = std::log(std::exp(-2.0) + std::exp(-1.0) + 1.0);
  CHECK(ls.values()[2] == doctest::Approx(-z).epsilon(1e-12));
  CHECK(std::isfinite(ls.values()[0]));
}

TEST_CASE("layer_norm rows have zero mean and unit variance") {
  Rng rng(3);
  Tensor a = leaf({4, 6}, rng);
  Tensor gain = Tensor::constant({6}, 1.0);
  Tensor bias = Tensor::zeros({6});
  Tensor n = layer_norm(a, gain, bias);
  for (std::size_t i = 0; i < 4; ++i) {
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < 6; ++j) mean += n.values()[i * 6 + j];
    mean /= 6.0;
    for (std::size_t j = 0; j < 6; ++j) {
      double d = n.values()[i * 6 + j] - mean;
      var += d * d;
    }
    var /= 6.0;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("pairwise bilinear scores match the expansion oracle") {
  Rng rng(4);
  std::size_t n = 3, h = 5;
  Tensor q = leaf({n, h}, rng);
  Tensor k = leaf({n, h}, rng);
  Tensor a = leaf({n * n, h}, rng);
  Tensor b = leaf({n * n, h}, rng);
  Tensor s = pairwise_bilinear_scores(q, k, a, b);
  REQUIRE(s.shape() == std::vector<std::size_t>{n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < h; ++t)
        acc += (q.values()[i * h + t] + a.values()[(i * n + j) * h + t]) *
               (k.values()[j * h + t] + b.values()[(i * n + j) * h + t]);
      CHECK(s.values()[i * n + j] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("gradients: elementwise and activations") {
  Rng rng(5);
  std::vector<Parameter> params;
  Tensor a = leaf({6}, rng);
  Tensor b = leaf({6}, rng);
  params.push_back({"a", a});
  params.push_back({"b", b});
  auto fn = [&]() {
    return sum_all(mul(sigmoid(a), add(tanh_t(b), relu(sub(a, b)))));
  };
  GradCheckReport rep = grad_check(fn, params, 1e-5, 1e-4);
  CAPTURE(rep.max_rel_error);
  CHECK(rep.passed);
}

TEST_CASE("gradients: matmul, transpose, slicing, stacking") {
  Rng rng(6);
  std::vector<Parameter> params;
  Tensor a = leaf({3, 4}, rng);
  Tensor b = leaf({4, 3}, rng);
  Tensor v = leaf({4}, rng);
  params.push_back({"a", a});
  params.push_back({"b", b});
  params.push_back({"v", v});
  auto fn = [&]() {
    Tensor m = matmul(a, b);                     // (3,3)
    Tensor t = transpose(m);                     // (3,3)
    Tensor r0 = row(t, 1);                       // (3)
    Tensor s = slice_vec(concat_vecs({r0, v}), 1, 5);
    Tensor st = stack_rows({s, s});              // (2,5)
    return sum_all(mul(st, st));
  };
  GradCheckReport rep = grad_check(fn, params, 1e-5, 1e-4);
  CAPTURE(rep.max_rel_error);
  CHECK(rep.passed);
}

TEST_CASE("gradients: softmax, log_softmax, layer_norm, gather") {
  Rng rng(7);
  std::vector<Parameter> params;
  Tensor table = leaf({5, 4}, rng);
  Tensor gain = Tensor::constant({4}, 1.0);
  Tensor bias = Tensor::zeros({4});
  params.push_back({"table", table});
  params.push_back({"gain", gain});
  params.push_back({"bias", bias});
  auto fn = [&]() {
    Tensor g = gather_rows(table, {0, 2, 2, 4});
    Tensor n = layer_norm(g, gain, bias);
    Tensor s = softmax_rows(n);
    Tensor v = row(s, 1);
    return sum_all(mul(log_softmax_vec(v), v));
  };
  GradCheckReport rep = grad_check(fn, params, 1e-5, 1e-4);
  CAPTURE(rep.max_rel_error);
  CHECK(rep.passed);
}

TEST_CASE("gradients: pairwise bilinear scores") {
  Rng rng(8);
  std::size_t n = 3, h = 4;
  std::vector<Parameter> params;
  Tensor q = leaf({n, h}, rng);
  Tensor k = leaf({n, h}, rng);
  Tensor a = leaf({n * n, h}, rng);
  Tensor b = leaf({n * n, h}, rng);
  params.push_back({"q", q});
  params.push_back({"k", k});
  params.push_back({"a", a});
  params.push_back({"b", b});
  Tensor probe = leaf({n, n}, rng);  // breaks softmax row-sum degeneracy
  auto fn = [&]() {
    Tensor s = softmax_rows(pairwise_bilinear_scores(q, k, a, b));
    return sum_all(mul(s, probe));
  };
  GradCheckReport rep = grad_check(fn, params, 1e-5, 1e-4);
  CAPTURE(rep.max_rel_error);
  CHECK(rep.passed);
}

TEST_CASE("gradients: random composite graphs") {
  Rng rng(9);
  for (int iter = 0; iter < 10; ++iter) {
    CAPTURE(iter);
    std::vector<Parameter> params;
    Tensor a = leaf({4, 4}, rng);
    Tensor b = leaf({4, 4}, rng);
    Tensor v = leaf({4}, rng);
    params.push_back({"a", a});
    params.push_back({"b", b});
    params.push_back({"v", v});
    auto fn = [&]() {
      Tensor x = matmul(a, b);
      Tensor y = add(x, transpose(x));
      Tensor z = sigmoid(affine(y, 0.5, -0.1));
      Tensor pooled = sum_axis0(z);
      return sum_all(mul(tanh_t(pooled), v));
    };
    GradCheckReport rep = grad_check(fn, params, 1e-5, 1e-4);
    CAPTURE(rep.max_rel_error);
    CHECK(rep.passed);
  }
}

TEST_CASE("leaf gradients accumulate across backward calls") {
  Tensor a = Tensor::from({2}, {1.0, 2.0});
  a.node()->is_leaf = true;
  Tensor loss1 = sum_all(mul(a, a));
  backward(loss1);
  std::vector<double> g1 = a.grad();
  CHECK(g1[0] == doctest::Approx(2.0));
  CHECK(g1[1] == doctest::Approx(4.0));
  Tensor loss2 = sum_all(a);
  backward(loss2);
  CHECK(a.grad()[0] == doctest::Approx(3.0));  // 2 + 1
  CHECK(a.grad()[1] == doctest::Approx(5.0));
  a.zero_grad();
  CHECK(a.grad()[0] == 0.0);
}

TEST_CASE("glorot initialization is deterministic in the seed") {
  Rng r1(11), r2(11), r3(12);
  Tensor a = Tensor::glorot({4, 4}, r1);
  Tensor b = Tensor::glorot({4, 4}, r2);
  Tensor c = Tensor::glorot({4, 4}, r3);
  CHECK(a.values() == b.values());
  CHECK(a.values() != c.values());
  double bound = std::sqrt(6.0 / 8.0);
  for (double v : a.values()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("optimizers reduce a quadratic") {
  Rng rng(13);
  for (bool use_adam : {false, true}) {
    Tensor x = leaf({4}, rng);
    std::vector<Parameter> params{{"x", x}};
    AdamState adam;
    double first = 0.0, last = 0.0;
    for (int step = 0; step < 50; ++step) {
      zero_grads(params);
      Tensor loss = sum_all(mul(x, x));
      if (step == 0) first = loss.item();
      last = loss.item();
      backward(loss);
      if (use_adam)
        adam_step(params, adam, 0.05);
      else
        sgd_step(params, 0.05);
    }
    CHECK(last < first * 0.1);
  }
}
