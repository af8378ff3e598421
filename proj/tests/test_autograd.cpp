#include <cmath>
#include <random>

#include "doctest.h"
#include "stgin/errors.hpp"
#include "stgin/gradcheck.hpp"
#include "stgin/ops.hpp"
#include "test_support.hpp"

using namespace stgin;
using stgin::testing::random_tensor;

namespace {

constexpr double kTolerance = 1e-4;

// Wraps an op into a scalar objective: mse against a fixed random target.
MultiScalarFn objective(std::function<Var(Tape&, const std::vector<Var>&)> op, Tensor target) {
  return [op = std::move(op), target = std::move(target)](Tape& tape, const std::vector<Var>& v) {
    const Var out = op(tape, v);
    return ops::mse(out, tape.constant(target.reshaped(out.shape())));
  };
}

void check_op(const std::vector<Tensor>& params,
              std::function<Var(Tape&, const std::vector<Var>&)> op, std::mt19937_64& rng) {
  Tape probe(false);
  std::vector<Var> vars;
  for (const Tensor& p : params) vars.push_back(probe.constant(p));
  const Shape out_shape = op(probe, vars).shape();
  const GradReport report =
      grad_check(objective(std::move(op), random_tensor(rng, out_shape)), params);
  CHECK(report.max_rel_error < kTolerance);
  CHECK(report.worst_index < report.checked);
}

}  // namespace

TEST_CASE("grad_check examples") {
  const GradReport square = grad_check(
      [](Tape&, Var x) { return ops::matmul(x, x); }, Tensor::matrix({{3.0}}));
  CHECK(square.max_rel_error < 1e-8);

  const GradReport linear = grad_check(
      [](Tape& tape, Var x) { return ops::matmul(tape.constant(Tensor::matrix({{2.0, -3.0}})), x); },
      Tensor::column({0.7, 1.9}));
  CHECK(linear.max_rel_error < 1e-9);

  CHECK_THROWS_AS(grad_check([](Tape&, Var x) { return x; }, Tensor::column({1.0, 2.0})),
                  ContractError);
}

TEST_CASE("every differentiable op passes the central-difference check") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t m = testing::random_size(rng, 1, 5);
    const std::size_t k = testing::random_size(rng, 1, 5);
    const std::size_t n = testing::random_size(rng, 1, 5);
    const std::size_t blocks = testing::random_size(rng, 1, 3);

    check_op({random_tensor(rng, {m, k}), random_tensor(rng, {k, n})},
             [](Tape&, const std::vector<Var>& v) { return ops::matmul(v[0], v[1]); }, rng);
    check_op({random_tensor(rng, {m, k}), random_tensor(rng, {n, k})},
             [](Tape&, const std::vector<Var>& v) { return ops::matmul_nt(v[0], v[1]); }, rng);
    check_op({random_tensor(rng, {blocks * m, k}), random_tensor(rng, {blocks * k, n})},
             [blocks](Tape&, const std::vector<Var>& v) {
               return ops::block_matmul(v[0], v[1], blocks);
             },
             rng);
    check_op({random_tensor(rng, {blocks * m, k}), random_tensor(rng, {blocks * n, k})},
             [blocks](Tape&, const std::vector<Var>& v) {
               return ops::block_matmul_nt(v[0], v[1], blocks);
             },
             rng);
    check_op({random_tensor(rng, {m, n}), random_tensor(rng, {m, n})},
             [](Tape&, const std::vector<Var>& v) { return ops::sub(ops::add(v[0], v[1]), v[1]); },
             rng);
    check_op({random_tensor(rng, {m, n}), random_tensor(rng, {1, n})},
             [](Tape&, const std::vector<Var>& v) { return ops::add_row(v[0], v[1]); }, rng);
    check_op({random_tensor(rng, {blocks * m, n}), random_tensor(rng, {m, n})},
             [](Tape&, const std::vector<Var>& v) { return ops::add_tiled(v[0], v[1]); }, rng);
    check_op({random_tensor(rng, {blocks * m, n}), random_tensor(rng, {blocks, n})},
             [](Tape&, const std::vector<Var>& v) { return ops::add_repeated(v[0], v[1]); }, rng);
    check_op({random_tensor(rng, {m, n})},
             [](Tape&, const std::vector<Var>& v) { return ops::scale(v[0], -1.3); }, rng);
    check_op({random_tensor(rng, {m, n}, -2.0, 2.0)},
             [](Tape&, const std::vector<Var>& v) { return ops::elu(v[0]); }, rng);
    check_op({random_tensor(rng, {m, n}, -2.0, 2.0)},
             [](Tape&, const std::vector<Var>& v) { return ops::leaky_relu(v[0], 0.2); }, rng);
    check_op({random_tensor(rng, {m, n}, -3.0, 3.0)},
             [](Tape&, const std::vector<Var>& v) { return ops::softmax_rows(v[0]); }, rng);

    std::vector<std::uint8_t> mask(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) mask[i * n + j] = (j <= i || (i + j) % 3 == 0) ? 1 : 0;
    }
    check_op({random_tensor(rng, {blocks * n, n}, -3.0, 3.0)},
             [mask, n](Tape&, const std::vector<Var>& v) {
               return ops::masked_softmax_rows(v[0], mask, n);
             },
             rng);

    std::vector<std::uint8_t> keep(m);
    for (std::size_t i = 0; i < m; ++i) keep[i] = i % 2;
    check_op({random_tensor(rng, {m, n})},
             [keep](Tape&, const std::vector<Var>& v) { return ops::zero_rows(v[0], keep); }, rng);

    const std::size_t width = n < 2 ? 2 : n;
    check_op({random_tensor(rng, {m, width}), random_tensor(rng, {1, width}, 0.5, 1.5),
              random_tensor(rng, {1, width})},
             [](Tape&, const std::vector<Var>& v) { return ops::layer_norm(v[0], v[1], v[2]); },
             rng);

    const std::size_t kw = 2 * testing::random_size(rng, 0, 2) + 1;
    check_op({random_tensor(rng, {blocks * (m + 2), k}), random_tensor(rng, {n, k, kw})},
             [blocks](Tape&, const std::vector<Var>& v) {
               return ops::conv1d_time(v[0], v[1], blocks);
             },
             rng);
    check_op({random_tensor(rng, {blocks * 2 * (m + 1), n})},
             [blocks](Tape&, const std::vector<Var>& v) {
               return ops::maxpool1d(v[0], 3, 2, 1, blocks);
             },
             rng);
    check_op({random_tensor(rng, {blocks * (m + 2), n})},
             [blocks](Tape&, const std::vector<Var>& v) {
               return ops::slice_rows(v[0], 1, 2, blocks);
             },
             rng);
    check_op({random_tensor(rng, {blocks * m, n}), random_tensor(rng, {blocks * k, n})},
             [blocks](Tape&, const std::vector<Var>& v) {
               return ops::concat_rows(v[0], v[1], blocks);
             },
             rng);
    check_op({random_tensor(rng, {m, n + 2})},
             [](Tape&, const std::vector<Var>& v) { return ops::slice_cols(v[0], 1, 2); }, rng);
    check_op({random_tensor(rng, {m, n}), random_tensor(rng, {m, k})},
             [](Tape&, const std::vector<Var>& v) { return ops::concat_cols({v[0], v[1], v[0]}); },
             rng);
    check_op({random_tensor(rng, {m, n})},
             [m](Tape&, const std::vector<Var>& v) {
               std::vector<std::size_t> idx;
               for (std::size_t i = 0; i < 2 * m; ++i) idx.push_back((i * 7) % m);
               return ops::gather_rows(v[0], idx);
             },
             rng);
    check_op({random_tensor(rng, {blocks * n, 1}), random_tensor(rng, {blocks * n, 1})},
             [blocks](Tape&, const std::vector<Var>& v) {
               return ops::pair_sum(v[0], v[1], blocks);
             },
             rng);
    check_op({random_tensor(rng, {m, n})},
             [m, n](Tape&, const std::vector<Var>& v) { return ops::reshape(v[0], {n, m}); }, rng);
    check_op({random_tensor(rng, {m, n})},
             [](Tape&, const std::vector<Var>& v) { return ops::sum(v[0]); }, rng);
  }
}

TEST_CASE("masked softmax gives exact zeros off the mask") {
  Tape tape(false);
  const std::vector<std::uint8_t> mask = {1, 0, 1, 1};
  const Var out = ops::masked_softmax_rows(tape.constant(Tensor::matrix({{5, 9}, {1, 1}, {2, 7}})),
                                           mask, 2);
  CHECK(out.value()(0, 0) == 1.0);
  CHECK(out.value()(0, 1) == 0.0);
  CHECK(out.value()(1, 0) == 0.5);
  CHECK(out.value()(2, 1) == 0.0);
}

TEST_CASE("backward requires a scalar root on a recording tape") {
  Tape tape;
  const Var x = tape.variable(Tensor::column({1.0, 2.0}));
  CHECK_THROWS_AS(tape.backward(x), ContractError);
  Tape inference(false);
  const Var y = inference.constant(Tensor::scalar(1.0));
  CHECK_THROWS_AS(inference.backward(y), ContractError);
}
