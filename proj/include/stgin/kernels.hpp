#pragma once

#include <cstddef>
#include <functional>
#include <span>

// Dense matrix kernels. Every kernel exists in a serial reference form and an
// OpenMP form that splits output rows across threads. Both forms run the same
// per-row code, so their results are bit-identical; tests and the benchmark
// compare them directly.
namespace stgin::kernels {

namespace serial {

// C[m×n] += A[m×k] · B[k×n]
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
// C[m×n] += A[m×k] · B[n×k]ᵀ
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
// C[k×n] += A[m×k]ᵀ · B[m×n]
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);

void for_each_index(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace serial

namespace parallel {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);

/// Runs body(i) for i in [0, count) across OpenMP threads. The first
/// exception thrown by any iteration is rethrown on the calling thread.
void for_each_index(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace parallel

// Dispatching entry points used by the autograd ops: parallel when the
// problem is large and the caller is not already inside a parallel region.
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);

bool in_parallel_region();
int max_threads();

}  // namespace stgin::kernels
