#pragma once

#include <cstddef>
#include <string_view>

namespace mcpfc::simd {

// Data-parallel inner loops of the solver. Complex arrays are passed as
// interleaved (re, im) doubles; `modes` counts complex entries.
//
// Every table entry has a scalar reference implementation and, where the
// build and the CPU allow it, a vectorized variant. The active table is picked
// once at startup; tests compare each variant against the scalar reference.
struct KernelTable {
  std::string_view name;

  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i a[i]
  double (*sum)(const double* a, std::size_t n);
  // out[i] = alpha * x[i] + beta * y[i]   (out may alias x or y)
  void (*axpby)(double alpha, const double* x, double beta, const double* y,
                double* out, std::size_t n);
  // out_h = v_h / (scale * diag_h + shift)   (out may alias v)
  void (*diag_solve)(const double* diag, double scale, double shift,
                     const double* v, double* out, std::size_t modes);
  // m2 = sum_h |v_h|^2 / den_h^2,  m3 = sum_h |v_h|^2 / den_h^3,
  // den_h = scale * diag_h + shift
  void (*diag_moments)(const double* diag, double scale, double shift,
                       const double* v, std::size_t modes, double* m2,
                       double* m3);
  // sum_h diag_h * |v_h|^2
  double (*diag_quadratic)(const double* diag, const double* v,
                           std::size_t modes);
  // out_h = diag_h * x_h + y_h   (out may alias x or y)
  void (*diag_axpy)(const double* diag, const double* x, const double* y,
                    double* out, std::size_t modes);
  // max_h |v_h|
  double (*max_abs_complex)(const double* v, std::size_t modes);
  // acc[i] += coef * prod_k factors[k][i],  0 <= nfactors <= 4
  void (*product_accumulate)(double* acc, double coef,
                             const double* const* factors, int nfactors,
                             std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

// Chosen on first use: AVX2 when available, unless the environment variable
// MCPFC_SIMD is set to "scalar".
const KernelTable& active_kernels();

}  // namespace mcpfc::simd
