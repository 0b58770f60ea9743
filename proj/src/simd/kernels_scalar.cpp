#include <algorithm>
#include <cmath>

#include "mcpfc/simd/kernels.hpp"

namespace mcpfc::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum(const double* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i];
  return s;
}

void axpby(double alpha, const double* x, double beta, const double* y,
           double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

void diag_solve(const double* diag, double scale, double shift,
                const double* v, double* out, std::size_t modes) {
  for (std::size_t h = 0; h < modes; ++h) {
    const double inv = 1.0 / (scale * diag[h] + shift);
    out[2 * h] = v[2 * h] * inv;
    out[2 * h + 1] = v[2 * h + 1] * inv;
  }
}

void diag_moments(const double* diag, double scale, double shift,
                  const double* v, std::size_t modes, double* m2, double* m3) {
  double s2 = 0.0;
  double s3 = 0.0;
  for (std::size_t h = 0; h < modes; ++h) {
    const double inv = 1.0 / (scale * diag[h] + shift);
    const double mag = v[2 * h] * v[2 * h] + v[2 * h + 1] * v[2 * h + 1];
    const double t = mag * inv * inv;
    s2 += t;
    s3 += t * inv;
  }
  *m2 = s2;
  *m3 = s3;
}

double diag_quadratic(const double* diag, const double* v, std::size_t modes) {
  double s = 0.0;
  for (std::size_t h = 0; h < modes; ++h)
    s += diag[h] * (v[2 * h] * v[2 * h] + v[2 * h + 1] * v[2 * h + 1]);
  return s;
}

void diag_axpy(const double* diag, const double* x, const double* y,
               double* out, std::size_t modes) {
  for (std::size_t h = 0; h < modes; ++h) {
    out[2 * h] = diag[h] * x[2 * h] + y[2 * h];
    out[2 * h + 1] = diag[h] * x[2 * h + 1] + y[2 * h + 1];
  }
}

double max_abs_complex(const double* v, std::size_t modes) {
  double m = 0.0;
  for (std::size_t h = 0; h < modes; ++h)
    m = std::max(m, v[2 * h] * v[2 * h] + v[2 * h + 1] * v[2 * h + 1]);
  return std::sqrt(m);
}

void product_accumulate(double* acc, double coef, const double* const* f,
                        int nfactors, std::size_t n) {
  switch (nfactors) {
    case 0:
      for (std::size_t i = 0; i < n; ++i) acc[i] += coef;
      break;
    case 1:
      for (std::size_t i = 0; i < n; ++i) acc[i] += coef * f[0][i];
      break;
    case 2:
      for (std::size_t i = 0; i < n; ++i) acc[i] += coef * (f[0][i] * f[1][i]);
      break;
    case 3:
      for (std::size_t i = 0; i < n; ++i)
        acc[i] += coef * (f[0][i] * f[1][i] * f[2][i]);
      break;
    default:
      for (std::size_t i = 0; i < n; ++i)
        acc[i] += coef * (f[0][i] * f[1][i] * f[2][i] * f[3][i]);
      break;
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar",       dot,       sum,
      axpby,          diag_solve, diag_moments,
      diag_quadratic, diag_axpy, max_abs_complex,
      product_accumulate,
  };
  return table;
}

}  // namespace mcpfc::simd
