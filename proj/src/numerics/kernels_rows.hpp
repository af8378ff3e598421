#pragma once

#include <cstddef>

// Row-range bodies shared by the serial and OpenMP kernels.
namespace stgin::kernels::rows {

inline void gemm_nn(const double* a, const double* b, double* c, std::size_t k, std::size_t n,
                    std::size_t row_begin, std::size_t row_end) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    double* c_row = c + i * n;
    const double* a_row = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double a_ip = a_row[p];
      if (a_ip == 0.0) continue;
      const double* b_row = b + p * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += a_ip * b_row[j];
    }
  }
}

inline void gemm_nt(const double* a, const double* b, double* c, std::size_t k, std::size_t n,
                    std::size_t row_begin, std::size_t row_end) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    const double* a_row = a + i * k;
    double* c_row = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* b_row = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
      c_row[j] += acc;
    }
  }
}

// Output rows of C = Aᵀ·B are indexed by A's columns.
inline void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                    std::size_t n, std::size_t row_begin, std::size_t row_end) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = a + i * k;
    const double* b_row = b + i * n;
    for (std::size_t p = row_begin; p < row_end; ++p) {
      const double a_ip = a_row[p];
      if (a_ip == 0.0) continue;
      double* c_row = c + p * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += a_ip * b_row[j];
    }
  }
}

}  // namespace stgin::kernels::rows
