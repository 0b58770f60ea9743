#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "mcpfc/simd/kernels.hpp"

namespace mcpfc::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Broadcasts diag[h], diag[h+1] to (d0, d0, d1, d1) to line up with two
// interleaved complex values.
inline __m256d load_diag_pair(const double* diag) {
  const __m128d d = _mm_loadu_pd(diag);
  return _mm256_permute4x64_pd(_mm256_castpd128_pd256(d), 0x50);
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                         _mm256_loadu_pd(b + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4)
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum(const double* a, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_add_pd(s0, _mm256_loadu_pd(a + i));
    s1 = _mm256_add_pd(s1, _mm256_loadu_pd(a + i + 4));
  }
  for (; i + 4 <= n; i += 4) s0 = _mm256_add_pd(s0, _mm256_loadu_pd(a + i));
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += a[i];
  return s;
}

void axpby(double alpha, const double* x, double beta, const double* y,
           double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                      _mm256_mul_pd(vb, _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

void diag_solve(const double* diag, double scale, double shift,
                const double* v, double* out, std::size_t modes) {
  const __m256d vs = _mm256_set1_pd(scale);
  const __m256d vt = _mm256_set1_pd(shift);
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t h = 0;
  for (; h + 2 <= modes; h += 2) {
    const __m256d den = _mm256_fmadd_pd(vs, load_diag_pair(diag + h), vt);
    const __m256d inv = _mm256_div_pd(one, den);
    _mm256_storeu_pd(out + 2 * h, _mm256_mul_pd(_mm256_loadu_pd(v + 2 * h), inv));
  }
  for (; h < modes; ++h) {
    const double inv = 1.0 / (scale * diag[h] + shift);
    out[2 * h] = v[2 * h] * inv;
    out[2 * h + 1] = v[2 * h + 1] * inv;
  }
}

void diag_moments(const double* diag, double scale, double shift,
                  const double* v, std::size_t modes, double* m2, double* m3) {
  const __m256d vs = _mm256_set1_pd(scale);
  const __m256d vt = _mm256_set1_pd(shift);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d a2 = _mm256_setzero_pd();
  __m256d a3 = _mm256_setzero_pd();
  std::size_t h = 0;
  for (; h + 2 <= modes; h += 2) {
    const __m256d den = _mm256_fmadd_pd(vs, load_diag_pair(diag + h), vt);
    const __m256d inv = _mm256_div_pd(one, den);
    const __m256d x = _mm256_loadu_pd(v + 2 * h);
    // Each lane holds re^2 or im^2; summing the lanes gives |v|^2.
    const __m256d t = _mm256_mul_pd(_mm256_mul_pd(x, x), _mm256_mul_pd(inv, inv));
    a2 = _mm256_add_pd(a2, t);
    a3 = _mm256_fmadd_pd(t, inv, a3);
  }
  double s2 = hsum(a2);
  double s3 = hsum(a3);
  for (; h < modes; ++h) {
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
  __m256d acc = _mm256_setzero_pd();
  std::size_t h = 0;
  for (; h + 2 <= modes; h += 2) {
    const __m256d x = _mm256_loadu_pd(v + 2 * h);
    acc = _mm256_fmadd_pd(load_diag_pair(diag + h), _mm256_mul_pd(x, x), acc);
  }
  double s = hsum(acc);
  for (; h < modes; ++h)
    s += diag[h] * (v[2 * h] * v[2 * h] + v[2 * h + 1] * v[2 * h + 1]);
  return s;
}

void diag_axpy(const double* diag, const double* x, const double* y,
               double* out, std::size_t modes) {
  std::size_t h = 0;
  for (; h + 2 <= modes; h += 2) {
    const __m256d r = _mm256_fmadd_pd(load_diag_pair(diag + h),
                                      _mm256_loadu_pd(x + 2 * h),
                                      _mm256_loadu_pd(y + 2 * h));
    _mm256_storeu_pd(out + 2 * h, r);
  }
  for (; h < modes; ++h) {
    out[2 * h] = diag[h] * x[2 * h] + y[2 * h];
    out[2 * h + 1] = diag[h] * x[2 * h + 1] + y[2 * h + 1];
  }
}

double max_abs_complex(const double* v, std::size_t modes) {
  __m256d m = _mm256_setzero_pd();
  std::size_t h = 0;
  for (; h + 2 <= modes; h += 2) {
    const __m256d x = _mm256_loadu_pd(v + 2 * h);
    const __m256d sq = _mm256_mul_pd(x, x);
    // (re0^2 + im0^2, same, re1^2 + im1^2, same)
    m = _mm256_max_pd(m, _mm256_hadd_pd(sq, sq));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, m);
  double best = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  for (; h < modes; ++h)
    best = std::max(best, v[2 * h] * v[2 * h] + v[2 * h + 1] * v[2 * h + 1]);
  return std::sqrt(best);
}

void product_accumulate(double* acc, double coef, const double* const* f,
                        int nfactors, std::size_t n) {
  const __m256d c = _mm256_set1_pd(coef);
  std::size_t i = 0;
  switch (nfactors) {
    case 0:
      for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), c));
      for (; i < n; ++i) acc[i] += coef;
      break;
    case 1:
      for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(c, _mm256_loadu_pd(f[0] + i),
                                                  _mm256_loadu_pd(acc + i)));
      for (; i < n; ++i) acc[i] += coef * f[0][i];
      break;
    case 2:
      for (; i + 4 <= n; i += 4) {
        const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(f[0] + i),
                                        _mm256_loadu_pd(f[1] + i));
        _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(c, p, _mm256_loadu_pd(acc + i)));
      }
      for (; i < n; ++i) acc[i] += coef * (f[0][i] * f[1][i]);
      break;
    case 3:
      for (; i + 4 <= n; i += 4) {
        __m256d p = _mm256_mul_pd(_mm256_loadu_pd(f[0] + i),
                                  _mm256_loadu_pd(f[1] + i));
        p = _mm256_mul_pd(p, _mm256_loadu_pd(f[2] + i));
        _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(c, p, _mm256_loadu_pd(acc + i)));
      }
      for (; i < n; ++i) acc[i] += coef * (f[0][i] * f[1][i] * f[2][i]);
      break;
    default:
      for (; i + 4 <= n; i += 4) {
        __m256d p = _mm256_mul_pd(_mm256_loadu_pd(f[0] + i),
                                  _mm256_loadu_pd(f[1] + i));
        p = _mm256_mul_pd(p, _mm256_loadu_pd(f[2] + i));
        p = _mm256_mul_pd(p, _mm256_loadu_pd(f[3] + i));
        _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(c, p, _mm256_loadu_pd(acc + i)));
      }
      for (; i < n; ++i)
        acc[i] += coef * (f[0][i] * f[1][i] * f[2][i] * f[3][i]);
      break;
  }
}

}  // namespace

const KernelTable& avx2_kernels_table() {
  static const KernelTable table{
      "avx2",         dot,       sum,
      axpby,          diag_solve, diag_moments,
      diag_quadratic, diag_axpy, max_abs_complex,
      product_accumulate,
  };
  return table;
}

}  // namespace mcpfc::simd
