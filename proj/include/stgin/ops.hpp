#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stgin/autograd.hpp"
#include "stgin/tensor.hpp"

// Differentiable operations recorded on a Tape, plus Tensor-in/Tensor-out
// conveniences for the ones that are used standalone.
//
// Many ops take a `blocks` argument: the input's rows are read as `blocks`
// consecutive equal-height matrices (one per node or per time step) and the
// op is applied to each block independently. This lets one tape op process
// every node sequence of a sample at once.
namespace stgin::ops {

Var matmul(Var a, Var b);
/// a · bᵀ
Var matmul_nt(Var a, Var b);
Var block_matmul(Var a, Var b, std::size_t blocks);
Var block_matmul_nt(Var a, Var b, std::size_t blocks);

Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Adds a 1×n row to every row.
Var add_row(Var a, Var row);
/// Row i receives t[i mod t.rows] (same pattern tiled down the blocks).
Var add_tiled(Var a, Var t);
/// Row i receives e[i / (a.rows / e.rows)] (one row per block).
Var add_repeated(Var a, Var e);
Var scale(Var a, double factor);

Var elu(Var x);
Var leaky_relu(Var x, double slope);

Var softmax_rows(Var x);
/// Softmax over the allowed entries of each row; disallowed entries are
/// exactly zero. `mask` has `mask_rows` rows of x.cols entries and repeats
/// down x (row i uses mask row i mod mask_rows). Every row needs at least one
/// allowed entry.
Var masked_softmax_rows(Var x, const std::vector<std::uint8_t>& mask, std::size_t mask_rows);
/// Zeroes every row i with keep[i] == 0.
Var zero_rows(Var x, const std::vector<std::uint8_t>& keep);

Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

/// Same-padded cross-correlation along rows (time) of each block.
/// x: (blocks·L)×c_in, kernels: [c_out, c_in, w] with odd w.
Var conv1d_time(Var x, Var kernels, std::size_t blocks = 1);
/// Max over time windows of each block, padding with -inf.
Var maxpool1d(Var x, std::size_t window, std::size_t stride, std::size_t pad,
              std::size_t blocks = 1);
std::size_t pooled_length(std::size_t length, std::size_t window, std::size_t stride,
                          std::size_t pad);

Var slice_rows(Var x, std::size_t start, std::size_t count, std::size_t blocks = 1);
Var concat_rows(Var a, Var b, std::size_t blocks = 1);
Var slice_cols(Var x, std::size_t start, std::size_t count);
Var concat_cols(const std::vector<Var>& parts);
Var gather_rows(Var x, const std::vector<std::size_t>& index);
/// src, dst: (blocks·n)×1 → (blocks·n)×n with out[(b,i), j] = src[b,i] + dst[b,j].
Var pair_sum(Var src, Var dst, std::size_t blocks);
Var reshape(Var x, Shape shape);

Var sum(Var x);
Var mse(Var prediction, Var target);

// Tensor conveniences (evaluated on a non-recording tape).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor elu(const Tensor& x);
/// x: L×c_in, kernels: [c_out, c_in, w].
Tensor conv1d_time(const Tensor& x, const Tensor& kernels);
Tensor maxpool1d(const Tensor& x, std::size_t window, std::size_t stride, std::size_t pad);

}  // namespace stgin::ops
