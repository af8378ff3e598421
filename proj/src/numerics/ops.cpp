#include "stgin/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "stgin/errors.hpp"
#include "stgin/kernels.hpp"

namespace stgin::ops {

namespace {

using Grad = std::span<const double>;

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
}

std::size_t block_height(std::size_t rows, std::size_t blocks, const char* op) {
  if (blocks == 0 || rows % blocks != 0) {
    throw DimensionError(std::string(op) + ": " + std::to_string(rows) +
                         " rows do not split into " + std::to_string(blocks) + " blocks");
  }
  return rows / blocks;
}

void accumulate(Tape& tape, Var v, Grad delta) {
  if (!tape.needs_grad(v)) return;
  auto g = tape.grad_buffer(v);
  for (std::size_t i = 0; i < delta.size(); ++i) g[i] += delta[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ for " + shape_string(av.shape()) +
                         " x " + shape_string(bv.shape()));
  }
  Tensor out({m, n});
  kernels::gemm_nn(av.data(), bv.data(), out.data(), m, k, n);
  return a.tape->record(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor&, Grad g) {
    if (t.needs_grad(a)) kernels::gemm_nt(g, t.value(b).data(), t.grad_buffer(a), m, n, k);
    if (t.needs_grad(b)) kernels::gemm_tn(t.value(a).data(), g, t.grad_buffer(b), m, k, n);
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul_nt");
  require_matrix(bv, "matmul_nt");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
  if (bv.cols() != k) {
    throw DimensionError("matmul_nt: inner dimensions differ for " + shape_string(av.shape()) +
                         " x " + shape_string(bv.shape()) + "^T");
  }
  Tensor out({m, n});
  kernels::gemm_nt(av.data(), bv.data(), out.data(), m, k, n);
  return a.tape->record(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor&, Grad g) {
    if (t.needs_grad(a)) kernels::gemm_nn(g, t.value(b).data(), t.grad_buffer(a), m, n, k);
    if (t.needs_grad(b)) kernels::gemm_tn(g, t.value(a).data(), t.grad_buffer(b), m, n, k);
  });
}

Var block_matmul(Var a, Var b, std::size_t blocks) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "block_matmul");
  require_matrix(bv, "block_matmul");
  const std::size_t m = block_height(av.rows(), blocks, "block_matmul");
  const std::size_t k = av.cols();
  const std::size_t n = bv.cols();
  if (block_height(bv.rows(), blocks, "block_matmul") != k) {
    throw DimensionError("block_matmul: inner dimensions differ for " + shape_string(av.shape()) +
                         " x " + shape_string(bv.shape()) + " in " + std::to_string(blocks) +
                         " blocks");
  }
  Tensor out({blocks * m, n});
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    kernels::gemm_nn(av.data().subspan(blk * m * k, m * k), bv.data().subspan(blk * k * n, k * n),
                     out.data().subspan(blk * m * n, m * n), m, k, n);
  }
  return a.tape->record(
      std::move(out), {a, b}, [a, b, m, k, n, blocks](Tape& t, const Tensor&, Grad g) {
        for (std::size_t blk = 0; blk < blocks; ++blk) {
          auto g_blk = g.subspan(blk * m * n, m * n);
          if (t.needs_grad(a)) {
            kernels::gemm_nt(g_blk, t.value(b).data().subspan(blk * k * n, k * n),
                             t.grad_buffer(a).subspan(blk * m * k, m * k), m, n, k);
          }
          if (t.needs_grad(b)) {
            kernels::gemm_tn(t.value(a).data().subspan(blk * m * k, m * k), g_blk,
                             t.grad_buffer(b).subspan(blk * k * n, k * n), m, k, n);
          }
        }
      });
}

Var block_matmul_nt(Var a, Var b, std::size_t blocks) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "block_matmul_nt");
  require_matrix(bv, "block_matmul_nt");
  const std::size_t m = block_height(av.rows(), blocks, "block_matmul_nt");
  const std::size_t n = block_height(bv.rows(), blocks, "block_matmul_nt");
  const std::size_t k = av.cols();
  if (bv.cols() != k) {
    throw DimensionError("block_matmul_nt: inner dimensions differ for " +
                         shape_string(av.shape()) + " x " + shape_string(bv.shape()) + "^T");
  }
  Tensor out({blocks * m, n});
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    kernels::gemm_nt(av.data().subspan(blk * m * k, m * k), bv.data().subspan(blk * n * k, n * k),
                     out.data().subspan(blk * m * n, m * n), m, k, n);
  }
  return a.tape->record(
      std::move(out), {a, b}, [a, b, m, k, n, blocks](Tape& t, const Tensor&, Grad g) {
        for (std::size_t blk = 0; blk < blocks; ++blk) {
          auto g_blk = g.subspan(blk * m * n, m * n);
          if (t.needs_grad(a)) {
            kernels::gemm_nn(g_blk, t.value(b).data().subspan(blk * n * k, n * k),
                             t.grad_buffer(a).subspan(blk * m * k, m * k), m, n, k);
          }
          if (t.needs_grad(b)) {
            kernels::gemm_tn(g_blk, t.value(a).data().subspan(blk * m * k, m * k),
                             t.grad_buffer(b).subspan(blk * n * k, n * k), m, n, k);
          }
        }
      });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, Grad g) {
    accumulate(t, a, g);
    accumulate(t, b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const auto bd = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, Grad g) {
    accumulate(t, a, g);
    if (t.needs_grad(b)) {
      auto gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var add_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.size() != av.cols()) {
    throw DimensionError("add_row: row " + shape_string(rv.shape()) + " does not match " +
                         shape_string(av.shape()));
  }
  Tensor out = av;
  const std::size_t n = av.cols();
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += rv[c];
  }
  return a.tape->record(std::move(out), {a, row}, [a, row, n](Tape& t, const Tensor&, Grad g) {
    accumulate(t, a, g);
    if (t.needs_grad(row)) {
      auto gr = t.grad_buffer(row);
      for (std::size_t i = 0; i < g.size(); ++i) gr[i % n] += g[i];
    }
  });
}

Var add_tiled(Var a, Var tile) {
  const Tensor& av = a.value();
  const Tensor& tv = tile.value();
  if (tv.cols() != av.cols() || tv.rows() == 0 || av.rows() % tv.rows() != 0) {
    throw DimensionError("add_tiled: tile " + shape_string(tv.shape()) + " does not tile " +
                         shape_string(av.shape()));
  }
  Tensor out = av;
  const std::size_t tile_size = tv.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += tv[i % tile_size];
  return a.tape->record(std::move(out), {a, tile},
                        [a, tile, tile_size](Tape& t, const Tensor&, Grad g) {
                          accumulate(t, a, g);
                          if (t.needs_grad(tile)) {
                            auto gt = t.grad_buffer(tile);
                            for (std::size_t i = 0; i < g.size(); ++i) gt[i % tile_size] += g[i];
                          }
                        });
}

Var add_repeated(Var a, Var e) {
  const Tensor& av = a.value();
  const Tensor& ev = e.value();
  if (ev.cols() != av.cols() || ev.rows() == 0 || av.rows() % ev.rows() != 0) {
    throw DimensionError("add_repeated: rows " + shape_string(ev.shape()) + " do not match " +
                         shape_string(av.shape()));
  }
  const std::size_t n = av.cols();
  const std::size_t per = av.rows() / ev.rows();
  Tensor out = av;
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += ev[(r / per) * n + c];
  }
  return a.tape->record(std::move(out), {a, e}, [a, e, n, per](Tape& t, const Tensor&, Grad g) {
    accumulate(t, a, g);
    if (t.needs_grad(e)) {
      auto ge = t.grad_buffer(e);
      const std::size_t rows = g.size() / n;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < n; ++c) ge[(r / per) * n + c] += g[r * n + c];
      }
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.storage()) v *= factor;
  return a.tape->record(std::move(out), {a}, [a, factor](Tape& t, const Tensor&, Grad g) {
    auto ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var elu(Var x) {
  Tensor out = x.value();
  for (double& v : out.storage()) v = v >= 0.0 ? v : std::expm1(v);
  return x.tape->record(std::move(out), {x}, [x](Tape& t, const Tensor& y, Grad g) {
    const auto yv = y.data();
    auto gx = t.grad_buffer(x);
    // For x < 0, d/dx (e^x - 1) = y + 1.
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += yv[i] >= 0.0 ? g[i] : g[i] * (yv[i] + 1.0);
  });
}

Var leaky_relu(Var x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw ParameterError("leaky_relu: slope " + std::to_string(slope) + " outside (0, 1)");
  }
  Tensor out = x.value();
  for (double& v : out.storage()) v = std::max(v, slope * v);
  return x.tape->record(std::move(out), {x}, [x, slope](Tape& t, const Tensor&, Grad g) {
    const auto xv = t.value(x).data();
    auto gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += xv[i] >= 0.0 ? g[i] : slope * g[i];
  });
}

namespace {

Var softmax_impl(Var x, const std::vector<std::uint8_t>* mask, std::size_t mask_rows) {
  const Tensor& xv = x.value();
  require_matrix(xv, "softmax_rows");
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (mask != nullptr && (mask_rows == 0 || mask->size() != mask_rows * cols)) {
    throw DimensionError("masked_softmax_rows: mask of " + std::to_string(mask->size()) +
                         " entries does not match " + std::to_string(mask_rows) + " rows of " +
                         std::to_string(cols));
  }
  Tensor out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = &xv[r * cols];
    double* o = &out[r * cols];
    const std::uint8_t* allowed = mask ? mask->data() + (r % mask_rows) * cols : nullptr;
    double peak = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t c = 0; c < cols; ++c) {
      if (allowed && !allowed[c]) continue;
      any = true;
      // NaN must survive the max so it reaches the loss instead of vanishing.
      peak = std::isnan(in[c]) ? in[c] : std::max(peak, in[c]);
      if (std::isnan(peak)) break;
    }
    if (!any) {
      throw ContractError("softmax row " + std::to_string(r) + " has no allowed entry");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      o[c] = (!allowed || allowed[c]) ? std::exp(in[c] - peak) : 0.0;
      total += o[c];
    }
    for (std::size_t c = 0; c < cols; ++c) o[c] /= total;
  }
  return x.tape->record(std::move(out), {x}, [x, cols](Tape& t, const Tensor& y, Grad g) {
    auto gx = t.grad_buffer(x);
    const std::size_t rows = g.size() / cols;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = &y[r * cols];
      const double* gr = &g[r * cols];
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += yr[c] * gr[c];
      for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += yr[c] * (gr[c] - dot);
    }
  });
}

}  // namespace

Var softmax_rows(Var x) { return softmax_impl(x, nullptr, 0); }

Var masked_softmax_rows(Var x, const std::vector<std::uint8_t>& mask, std::size_t mask_rows) {
  return softmax_impl(x, &mask, mask_rows);
}

Var zero_rows(Var x, const std::vector<std::uint8_t>& keep) {
  const Tensor& xv = x.value();
  if (keep.size() != xv.rows()) {
    throw DimensionError("zero_rows: " + std::to_string(keep.size()) + " flags for " +
                         std::to_string(xv.rows()) + " rows");
  }
  const std::size_t cols = xv.cols();
  Tensor out = xv;
  for (std::size_t r = 0; r < keep.size(); ++r) {
    if (!keep[r]) std::fill_n(&out[r * cols], cols, 0.0);
  }
  return x.tape->record(std::move(out), {x}, [x, keep, cols](Tape& t, const Tensor&, Grad g) {
    auto gx = t.grad_buffer(x);
    for (std::size_t r = 0; r < keep.size(); ++r) {
      if (!keep[r]) continue;
      for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += g[r * cols + c];
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = x.value();
  require_matrix(xv, "layer_norm");
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (gain.value().size() != cols || bias.value().size() != cols) {
    throw DimensionError("layer_norm: gain/bias " + shape_string(gain.shape()) + "/" +
                         shape_string(bias.shape()) + " do not match " + shape_string(xv.shape()));
  }
  Tensor normed({rows, cols});
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = &xv[r * cols];
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += in[c];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (in[c] - mean) * (in[c] - mean);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) normed[r * cols + c] = (in[c] - mean) * inv_std[r];
  }
  Tensor out({rows, cols});
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out[r * cols + c] = gv[c] * normed[r * cols + c] + bv[c];
    }
  }
  return x.tape->record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, normed = std::move(normed), inv_std = std::move(inv_std), rows, cols](
          Tape& t, const Tensor&, Grad g) {
        if (t.needs_grad(gain) || t.needs_grad(bias)) {
          std::vector<double> dg(cols, 0.0), db(cols, 0.0);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              dg[c] += g[r * cols + c] * normed[r * cols + c];
              db[c] += g[r * cols + c];
            }
          }
          accumulate(t, gain, dg);
          accumulate(t, bias, db);
        }
        if (!t.needs_grad(x)) return;
        const Tensor& gv = t.value(gain);
        auto gx = t.grad_buffer(x);
        const double n = static_cast<double>(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = g[r * cols + c] * gv[c];
            mean_d += d;
            mean_dx += d * normed[r * cols + c];
          }
          mean_d /= n;
          mean_dx /= n;
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = g[r * cols + c] * gv[c];
            gx[r * cols + c] += inv_std[r] * (d - mean_d - normed[r * cols + c] * mean_dx);
          }
        }
      });
}

Var conv1d_time(Var x, Var kernels, std::size_t blocks) {
  const Tensor& xv = x.value();
  const Tensor& kv = kernels.value();
  require_matrix(xv, "conv1d_time");
  if (kv.rank() != 3) {
    throw DimensionError("conv1d_time: kernels must be [c_out, c_in, w], got " +
                         shape_string(kv.shape()));
  }
  const std::size_t c_out = kv.dim(0), c_in = kv.dim(1), width = kv.dim(2);
  if (width % 2 == 0) {
    throw ParameterError("conv1d_time: kernel width " + std::to_string(width) + " is even");
  }
  if (xv.cols() != c_in) {
    throw DimensionError("conv1d_time: input " + shape_string(xv.shape()) + " has " +
                         std::to_string(xv.cols()) + " channels, kernels expect " +
                         std::to_string(c_in));
  }
  const std::size_t len = block_height(xv.rows(), blocks, "conv1d_time");
  const std::size_t pad = width / 2;

  // Per-tap weight matrices laid out [c_in × c_out] so a tap is one gemm.
  std::vector<double> taps(width * c_in * c_out);
  for (std::size_t o = 0; o < c_out; ++o) {
    for (std::size_t c = 0; c < c_in; ++c) {
      for (std::size_t q = 0; q < width; ++q) {
        taps[(q * c_in + c) * c_out + o] = kv[(o * c_in + c) * width + q];
      }
    }
  }
  auto tap = [&taps, c_in, c_out](std::size_t q) {
    return std::span<const double>(taps).subspan(q * c_in * c_out, c_in * c_out);
  };

  // Output row t reads input row t + q - pad; valid t is [lo, hi).
  auto valid = [len, pad](std::size_t q, std::size_t& lo, std::size_t& hi) {
    lo = q < pad ? pad - q : 0;
    hi = std::min(len, len + pad - q);
  };

  Tensor out({blocks * len, c_out});
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    for (std::size_t q = 0; q < width; ++q) {
      std::size_t lo = 0, hi = 0;
      valid(q, lo, hi);
      if (lo >= hi) continue;
      const std::size_t src = blk * len + lo + q - pad;
      kernels::gemm_nn(xv.data().subspan(src * c_in, (hi - lo) * c_in), tap(q),
                       out.data().subspan((blk * len + lo) * c_out, (hi - lo) * c_out), hi - lo,
                       c_in, c_out);
    }
  }
  return x.tape->record(
      std::move(out), {x, kernels},
      [x, kernels, taps = std::move(taps), blocks, len, pad, width, c_in, c_out, valid](
          Tape& t, const Tensor&, Grad g) {
        const Tensor& xv = t.value(x);
        std::vector<double> dtaps(t.needs_grad(kernels) ? taps.size() : 0, 0.0);
        for (std::size_t blk = 0; blk < blocks; ++blk) {
          for (std::size_t q = 0; q < width; ++q) {
            std::size_t lo = 0, hi = 0;
            valid(q, lo, hi);
            if (lo >= hi) continue;
            const std::size_t src = blk * len + lo + q - pad;
            auto g_rows = g.subspan((blk * len + lo) * c_out, (hi - lo) * c_out);
            if (t.needs_grad(x)) {
              kernels::gemm_nt(g_rows,
                               std::span<const double>(taps).subspan(q * c_in * c_out, c_in * c_out),
                               t.grad_buffer(x).subspan(src * c_in, (hi - lo) * c_in), hi - lo,
                               c_out, c_in);
            }
            if (!dtaps.empty()) {
              kernels::gemm_tn(xv.data().subspan(src * c_in, (hi - lo) * c_in), g_rows,
                               std::span<double>(dtaps).subspan(q * c_in * c_out, c_in * c_out),
                               hi - lo, c_in, c_out);
            }
          }
        }
        if (!dtaps.empty()) {
          auto gk = t.grad_buffer(kernels);
          for (std::size_t o = 0; o < c_out; ++o) {
            for (std::size_t c = 0; c < c_in; ++c) {
              for (std::size_t q = 0; q < width; ++q) {
                gk[(o * c_in + c) * width + q] += dtaps[(q * c_in + c) * c_out + o];
              }
            }
          }
        }
      });
}

std::size_t pooled_length(std::size_t length, std::size_t window, std::size_t stride,
                          std::size_t pad) {
  if (window == 0 || stride == 0) {
    throw ParameterError("maxpool1d: window and stride must be positive");
  }
  if (length + 2 * pad < window) {
    throw ParameterError("maxpool1d: window " + std::to_string(window) +
                         " exceeds padded length " + std::to_string(length + 2 * pad));
  }
  return (length + 2 * pad - window) / stride + 1;
}

Var maxpool1d(Var x, std::size_t window, std::size_t stride, std::size_t pad, std::size_t blocks) {
  const Tensor& xv = x.value();
  require_matrix(xv, "maxpool1d");
  if (pad >= window) {
    throw ParameterError("maxpool1d: padding " + std::to_string(pad) +
                         " would create all-padding windows for width " + std::to_string(window));
  }
  const std::size_t len = block_height(xv.rows(), blocks, "maxpool1d");
  const std::size_t out_len = pooled_length(len, window, stride, pad);
  const std::size_t cols = xv.cols();
  Tensor out({blocks * out_len, cols});
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    for (std::size_t o = 0; o < out_len; ++o) {
      // Window covers padded positions [o*stride, o*stride + window).
      const std::size_t first = o * stride;
      const std::size_t lo = first < pad ? 0 : first - pad;
      const std::size_t hi = std::min(len, first + window - pad);
      for (std::size_t c = 0; c < cols; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_row = blk * len + lo;
        for (std::size_t i = lo; i < hi; ++i) {
          const double v = xv[(blk * len + i) * cols + c];
          if (v > best) {
            best = v;
            best_row = blk * len + i;
          }
        }
        out[(blk * out_len + o) * cols + c] = best;
        argmax[(blk * out_len + o) * cols + c] = best_row * cols + c;
      }
    }
  }
  return x.tape->record(std::move(out), {x},
                        [x, argmax = std::move(argmax)](Tape& t, const Tensor&, Grad g) {
                          auto gx = t.grad_buffer(x);
                          for (std::size_t i = 0; i < g.size(); ++i) gx[argmax[i]] += g[i];
                        });
}

Var slice_rows(Var x, std::size_t start, std::size_t count, std::size_t blocks) {
  const Tensor& xv = x.value();
  require_matrix(xv, "slice_rows");
  const std::size_t len = block_height(xv.rows(), blocks, "slice_rows");
  if (start + count > len) {
    throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") exceed block height " +
                         std::to_string(len));
  }
  const std::size_t cols = xv.cols();
  Tensor out({blocks * count, cols});
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    std::copy_n(&xv[(blk * len + start) * cols], count * cols, &out[blk * count * cols]);
  }
  return x.tape->record(std::move(out), {x},
                        [x, start, count, blocks, len, cols](Tape& t, const Tensor&, Grad g) {
                          auto gx = t.grad_buffer(x);
                          for (std::size_t blk = 0; blk < blocks; ++blk) {
                            const std::size_t dst = (blk * len + start) * cols;
                            const std::size_t src = blk * count * cols;
                            for (std::size_t i = 0; i < count * cols; ++i) gx[dst + i] += g[src + i];
                          }
                        });
}

Var concat_rows(Var a, Var b, std::size_t blocks) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "concat_rows");
  require_matrix(bv, "concat_rows");
  if (av.cols() != bv.cols()) {
    throw DimensionError("concat_rows: column counts of " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()) + " differ");
  }
  const std::size_t la = block_height(av.rows(), blocks, "concat_rows");
  const std::size_t lb = block_height(bv.rows(), blocks, "concat_rows");
  const std::size_t cols = av.cols();
  Tensor out({blocks * (la + lb), cols});
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    double* dst = &out[blk * (la + lb) * cols];
    std::copy_n(&av[blk * la * cols], la * cols, dst);
    std::copy_n(&bv[blk * lb * cols], lb * cols, dst + la * cols);
  }
  return a.tape->record(std::move(out), {a, b},
                        [a, b, la, lb, cols, blocks](Tape& t, const Tensor&, Grad g) {
                          for (std::size_t blk = 0; blk < blocks; ++blk) {
                            const std::size_t src = blk * (la + lb) * cols;
                            if (t.needs_grad(a)) {
                              auto ga = t.grad_buffer(a);
                              for (std::size_t i = 0; i < la * cols; ++i) {
                                ga[blk * la * cols + i] += g[src + i];
                              }
                            }
                            if (t.needs_grad(b)) {
                              auto gb = t.grad_buffer(b);
                              for (std::size_t i = 0; i < lb * cols; ++i) {
                                gb[blk * lb * cols + i] += g[src + la * cols + i];
                              }
                            }
                          }
                        });
}

Var slice_cols(Var x, std::size_t start, std::size_t count) {
  const Tensor& xv = x.value();
  require_matrix(xv, "slice_cols");
  const std::size_t cols = xv.cols(), rows = xv.rows();
  if (start + count > cols) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") exceed " + std::to_string(cols));
  }
  Tensor out({rows, count});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(&xv[r * cols + start], count, &out[r * count]);
  }
  return x.tape->record(std::move(out), {x},
                        [x, start, count, cols, rows](Tape& t, const Tensor&, Grad g) {
                          auto gx = t.grad_buffer(x);
                          for (std::size_t r = 0; r < rows; ++r) {
                            for (std::size_t c = 0; c < count; ++c) {
                              gx[r * cols + start + c] += g[r * count + c];
                            }
                          }
                        });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: nothing to concatenate");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    require_matrix(p.value(), "concat_cols");
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row counts differ (" + std::to_string(rows) + " vs " +
                           std::to_string(p.rows()) + ")");
    }
    cols += p.cols();
  }
  Tensor out({rows, cols});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    const std::size_t pc = pv.cols();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(&pv[r * pc], pc, &out[r * cols + offset]);
    offset += pc;
  }
  return parts.front().tape->record(std::move(out), parts,
                                    [parts, rows, cols](Tape& t, const Tensor&, Grad g) {
                                      std::size_t offset = 0;
                                      for (const Var& p : parts) {
                                        const std::size_t pc = t.value(p).cols();
                                        if (t.needs_grad(p)) {
                                          auto gp = t.grad_buffer(p);
                                          for (std::size_t r = 0; r < rows; ++r) {
                                            for (std::size_t c = 0; c < pc; ++c) {
                                              gp[r * pc + c] += g[r * cols + offset + c];
                                            }
                                          }
                                        }
                                        offset += pc;
                                      }
                                    });
}

Var gather_rows(Var x, const std::vector<std::size_t>& index) {
  const Tensor& xv = x.value();
  require_matrix(xv, "gather_rows");
  const std::size_t cols = xv.cols();
  Tensor out({index.size(), cols});
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= xv.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(index[r]) + " out of " +
                           std::to_string(xv.rows()) + " rows");
    }
    std::copy_n(&xv[index[r] * cols], cols, &out[r * cols]);
  }
  return x.tape->record(std::move(out), {x}, [x, index, cols](Tape& t, const Tensor&, Grad g) {
    auto gx = t.grad_buffer(x);
    for (std::size_t r = 0; r < index.size(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) gx[index[r] * cols + c] += g[r * cols + c];
    }
  });
}

Var pair_sum(Var src, Var dst, std::size_t blocks) {
  const Tensor& sv = src.value();
  const Tensor& dv = dst.value();
  if (sv.cols() != 1 || dv.cols() != 1 || sv.rows() != dv.rows()) {
    throw DimensionError("pair_sum: expected matching column vectors, got " +
                         shape_string(sv.shape()) + " and " + shape_string(dv.shape()));
  }
  const std::size_t n = block_height(sv.rows(), blocks, "pair_sum");
  Tensor out({blocks * n, n});
  for (std::size_t blk = 0; blk < blocks; ++blk) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        out[(blk * n + i) * n + j] = sv[blk * n + i] + dv[blk * n + j];
      }
    }
  }
  return src.tape->record(std::move(out), {src, dst},
                          [src, dst, n, blocks](Tape& t, const Tensor&, Grad g) {
                            const bool gs = t.needs_grad(src), gd = t.needs_grad(dst);
                            for (std::size_t blk = 0; blk < blocks; ++blk) {
                              for (std::size_t i = 0; i < n; ++i) {
                                for (std::size_t j = 0; j < n; ++j) {
                                  const double v = g[(blk * n + i) * n + j];
                                  if (gs) t.grad_buffer(src)[blk * n + i] += v;
                                  if (gd) t.grad_buffer(dst)[blk * n + j] += v;
                                }
                              }
                            }
                          });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape->record(std::move(out), {x},
                        [x](Tape& t, const Tensor&, Grad g) { accumulate(t, x, g); });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return x.tape->record(Tensor::scalar(total), {x}, [x](Tape& t, const Tensor&, Grad g) {
    auto gx = t.grad_buffer(x);
    for (double& v : gx) v += g[0];
  });
}

Var mse(Var prediction, Var target) {
  require_same_shape(prediction.value(), target.value(), "mse");
  const auto p = prediction.value().data();
  const auto q = target.value().data();
  if (p.empty()) throw DimensionError("mse: empty tensors");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] - q[i]) * (p[i] - q[i]);
  const double n = static_cast<double>(p.size());
  return prediction.tape->record(
      Tensor::scalar(total / n), {prediction, target},
      [prediction, target, n](Tape& t, const Tensor&, Grad g) {
        const auto p = t.value(prediction).data();
        const auto q = t.value(target).data();
        const double factor = 2.0 * g[0] / n;
        if (t.needs_grad(prediction)) {
          auto gp = t.grad_buffer(prediction);
          for (std::size_t i = 0; i < p.size(); ++i) gp[i] += factor * (p[i] - q[i]);
        }
        if (t.needs_grad(target)) {
          auto gq = t.grad_buffer(target);
          for (std::size_t i = 0; i < p.size(); ++i) gq[i] -= factor * (p[i] - q[i]);
        }
      });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape tape(false);
  return matmul(tape.constant(a), tape.constant(b)).value();
}

Tensor softmax_rows(const Tensor& x) {
  Tape tape(false);
  return softmax_rows(tape.constant(x)).value();
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Tape tape(false);
  return leaky_relu(tape.constant(x), slope).value();
}

Tensor elu(const Tensor& x) {
  Tape tape(false);
  return elu(tape.constant(x)).value();
}

Tensor conv1d_time(const Tensor& x, const Tensor& kernels) {
  Tape tape(false);
  return conv1d_time(tape.constant(x), tape.constant(kernels), 1).value();
}

Tensor maxpool1d(const Tensor& x, std::size_t window, std::size_t stride, std::size_t pad) {
  Tape tape(false);
  return maxpool1d(tape.constant(x), window, stride, pad, 1).value();
}

}  // namespace stgin::ops
