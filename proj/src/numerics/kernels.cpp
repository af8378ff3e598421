#include "stgin/kernels.hpp"

#include <algorithm>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kernels_rows.hpp"

namespace stgin::kernels {

namespace {

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 15;

bool worth_parallel(std::size_t m, std::size_t k, std::size_t n) {
  return m * k * n >= kParallelWork && max_threads() > 1 && !in_parallel_region();
}

template <class RowFn>
void split_rows(std::size_t rows, RowFn&& fn) {
#ifdef _OPENMP
  const auto total = static_cast<long long>(rows);
#pragma omp parallel
  {
    const long long threads = omp_get_num_threads();
    const long long tid = omp_get_thread_num();
    const long long chunk = (total + threads - 1) / threads;
    const long long begin = std::min(total, tid * chunk);
    const long long end = std::min(total, begin + chunk);
    if (begin < end) fn(static_cast<std::size_t>(begin), static_cast<std::size_t>(end));
  }
#else
  fn(std::size_t{0}, rows);
#endif
}

}  // namespace

bool in_parallel_region() {
#ifdef _OPENMP
  return omp_in_parallel() != 0;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  rows::gemm_nn(a.data(), b.data(), c.data(), k, n, 0, m);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  rows::gemm_nt(a.data(), b.data(), c.data(), k, n, 0, m);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  rows::gemm_tn(a.data(), b.data(), c.data(), m, k, n, 0, k);
}

void for_each_index(std::size_t count, const std::function<void(std::size_t)>& body) {
  for (std::size_t i = 0; i < count; ++i) body(i);
}

}  // namespace serial

namespace parallel {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  split_rows(m, [&](std::size_t lo, std::size_t hi) {
    rows::gemm_nn(a.data(), b.data(), c.data(), k, n, lo, hi);
  });
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  split_rows(m, [&](std::size_t lo, std::size_t hi) {
    rows::gemm_nt(a.data(), b.data(), c.data(), k, n, lo, hi);
  });
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  split_rows(k, [&](std::size_t lo, std::size_t hi) {
    rows::gemm_tn(a.data(), b.data(), c.data(), m, k, n, lo, hi);
  });
}

void for_each_index(std::size_t count, const std::function<void(std::size_t)>& body) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
#ifdef _OPENMP
  const auto total = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < total; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
#else
  for (std::size_t i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
      if (!failure) failure = std::current_exception();
    }
  }
#endif
  if (failure) std::rethrow_exception(failure);
}

}  // namespace parallel

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  if (worth_parallel(m, k, n)) {
    parallel::gemm_nn(a, b, c, m, k, n);
  } else {
    serial::gemm_nn(a, b, c, m, k, n);
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  if (worth_parallel(m, k, n)) {
    parallel::gemm_nt(a, b, c, m, k, n);
  } else {
    serial::gemm_nt(a, b, c, m, k, n);
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
  if (worth_parallel(m, k, n)) {
    parallel::gemm_tn(a, b, c, m, k, n);
  } else {
    serial::gemm_tn(a, b, c, m, k, n);
  }
}

}  // namespace stgin::kernels
