#include "mcpfc/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "mcpfc/simd/kernels.hpp"

namespace mcpfc {

namespace {

// The FFTW planner is not thread-safe; execution of an existing plan on new
// arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::string join(std::span<const int> v) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ')';
  return os.str();
}

}  // namespace

// Real-data transforms over the full mode box. Only the half spectrum with
// last-dimension index k <= N/2 goes through FFTW; the rest is filled from
// Hermitian symmetry.
class FftPlan {
 public:
  FftPlan(std::span<const int> dims, std::size_t size)
      : size_(size), last_(dims.back()), half_last_(dims.back() / 2 + 1),
        outer_(size / dims.back()) {
    std::vector<double> real(size_);
    std::vector<Complex> half(outer_ * half_last_);
    auto* c = reinterpret_cast<fftw_complex*>(half.data());
    const std::vector<int> n(dims.begin(), dims.end());
    const int rank = static_cast<int>(n.size());
    // FFTW_ESTIMATE keeps plan selection, and hence rounding, reproducible.
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(planner_mutex());
    r2c_ = fftw_plan_dft_r2c(rank, n.data(), real.data(), c, flags);
    c2r_ = fftw_plan_dft_c2r(rank, n.data(), c, real.data(), flags | FFTW_DESTROY_INPUT);
  }

  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(r2c_);
    fftw_destroy_plan(c2r_);
  }

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  // out(r) = sum_h full(h) e^{+i...}; `full` must be Hermitian.
  void synthesize(const Complex* full, double* out, std::vector<Complex>& half) const {
    half.resize(outer_ * half_last_);
    for (std::size_t o = 0; o < outer_; ++o)
      std::copy_n(full + o * last_, half_last_, half.data() + o * half_last_);
    fftw_execute_dft_c2r(c2r_, reinterpret_cast<fftw_complex*>(half.data()), out);
  }

  // full(h) = sum_r in(r) e^{-i...}, unnormalized; conj maps flat h to -h.
  void analyze(const double* in, Complex* full, const std::size_t* conj) const {
    fftw_execute_dft_r2c(r2c_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(full));
    // Spread rows from the packed layout, last row first so nothing is
    // overwritten before it moves.
    for (std::size_t o = outer_; o-- > 1;)
      std::copy_backward(full + o * half_last_, full + (o + 1) * half_last_,
                         full + o * last_ + half_last_);
    for (std::size_t o = 0; o < outer_; ++o)
      for (std::size_t k = half_last_; k < last_; ++k) {
        const std::size_t i = o * last_ + k;
        full[i] = std::conj(full[conj[i]]);
      }
  }

  std::size_t size() const { return size_; }

 private:
  std::size_t size_;
  std::size_t last_;
  std::size_t half_last_;
  std::size_t outer_;
  fftw_plan r2c_;
  fftw_plan c2r_;
};

Matrix::Matrix(int r, int c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != static_cast<std::size_t>(r) * c)
    throw ValidationError(ValidationError::Kind::size_mismatch,
                          "matrix data does not match its shape");
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double determinant(const Matrix& m) {
  Matrix a = m;
  const int n = a.rows;
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (a(pivot, col) == 0.0) return 0.0;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a(pivot, c), a(col, c));
      det = -det;
    }
    det *= a(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      for (int c = col; c < n; ++c) a(r, c) -= f * a(col, c);
    }
  }
  return det;
}

int matrix_rank(const Matrix& m, double rel_tol) {
  Matrix a = m;
  double scale = 0.0;
  for (double v : a.data) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0;
  const double tol = rel_tol * scale;
  int rank = 0;
  for (int col = 0; col < a.cols && rank < a.rows; ++col) {
    int pivot = rank;
    for (int r = rank + 1; r < a.rows; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) <= tol) continue;
    for (int c = 0; c < a.cols; ++c) std::swap(a(pivot, c), a(rank, c));
    for (int r = rank + 1; r < a.rows; ++r) {
      const double f = a(r, col) / a(rank, col);
      for (int c = col; c < a.cols; ++c) a(r, c) -= f * a(rank, c);
    }
    ++rank;
  }
  return rank;
}

bool GridSpec::contains(const ModeIndex& h) const {
  if (static_cast<int>(h.size()) != n_) return false;
  for (int l = 0; l < n_; ++l) {
    const int half = mode_counts_[l] / 2;
    if (h[l] < -half || h[l] >= half) return false;
  }
  return true;
}

std::size_t GridSpec::flat_index(const ModeIndex& h) const {
  if (!contains(h))
    throw ValidationError(ValidationError::Kind::out_of_range,
                          "mode index " + join(h) + " outside the truncation box");
  std::size_t flat = 0;
  for (int l = 0; l < n_; ++l) {
    const int k = h[l] < 0 ? h[l] + mode_counts_[l] : h[l];
    flat = flat * mode_counts_[l] + k;
  }
  return flat;
}

ModeIndex GridSpec::mode_index(std::size_t flat) const {
  ModeIndex h(n_);
  for (int l = n_ - 1; l >= 0; --l) {
    const int nl = mode_counts_[l];
    const int k = static_cast<int>(flat % nl);
    flat /= nl;
    h[l] = k < nl / 2 ? k : k - nl;
  }
  return h;
}

bool GridSpec::same_layout(const GridSpec& other) const {
  return this == &other ||
         (n_ == other.n_ && d_ == other.d_ && mode_counts_ == other.mode_counts_ &&
          basis_ == other.basis_ && projection_ == other.projection_);
}

GridPtr make_grid(int n, int d, std::vector<int> mode_counts, Matrix recip_basis,
                  Matrix projection) {
  using Kind = ValidationError::Kind;
  if (n < 1 || d < 1 || d > n)
    throw ValidationError(Kind::bad_dimensions, "require 1 <= physical_dim <= lattice_dim");
  if (static_cast<int>(mode_counts.size()) != n)
    throw ValidationError(Kind::bad_dimensions, "mode_counts must have lattice_dim entries");
  if (recip_basis.rows != n || recip_basis.cols != n)
    throw ValidationError(Kind::bad_dimensions, "recip_basis must be lattice_dim x lattice_dim");
  if (projection.rows != d || projection.cols != n)
    throw ValidationError(Kind::bad_dimensions,
                          "projection must be physical_dim x lattice_dim");

  std::size_t total = 1;
  for (int nl : mode_counts) {
    if (nl < 2 || nl % 2 != 0)
      throw ValidationError(Kind::odd_mode_count,
                            "mode counts must be even and >= 2, got " + join(mode_counts));
    if (total > (std::size_t{1} << 40) / static_cast<std::size_t>(nl))
      throw ValidationError(Kind::bad_dimensions, "mode box too large");
    total *= static_cast<std::size_t>(nl);
  }

  double frob = 0.0;
  for (double v : recip_basis.data) frob += v * v;
  frob = std::sqrt(frob);
  const double det = determinant(recip_basis);
  if (!(std::abs(det) > 1e-12 * std::pow(frob, n)))
    throw ValidationError(Kind::singular_basis, "reciprocal basis B is not invertible");
  if (matrix_rank(projection) != d)
    throw ValidationError(Kind::rank_deficient_projection,
                          "projection matrix P does not have full row rank");

  auto grid = std::shared_ptr<GridSpec>(new GridSpec());
  grid->n_ = n;
  grid->d_ = d;
  grid->mode_counts_ = std::move(mode_counts);
  grid->basis_ = std::move(recip_basis);
  grid->projection_ = std::move(projection);
  grid->size_ = total;

  // PB, d x n
  Matrix pb(d, n);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < n; ++c) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += grid->projection_(r, k) * grid->basis_(k, c);
      pb(r, c) = s;
    }

  grid->wavevectors_.resize(total * d);
  grid->wave_norm_sq_.resize(total);
  grid->conj_.resize(total);
  std::vector<std::size_t> stride(n, 1);
  for (int l = n - 2; l >= 0; --l) stride[l] = stride[l + 1] * grid->mode_counts_[l + 1];

  for (std::size_t flat = 0; flat < total; ++flat) {
    const ModeIndex h = grid->mode_index(flat);
    double norm = 0.0;
    for (int r = 0; r < d; ++r) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) s += pb(r, c) * h[c];
      grid->wavevectors_[flat * d + r] = s;
      norm += s * s;
    }
    grid->wave_norm_sq_[flat] = norm;
    std::size_t conj = 0;
    for (int l = 0; l < n; ++l) {
      const int nl = grid->mode_counts_[l];
      const int k = h[l] < 0 ? h[l] + nl : h[l];
      conj += stride[l] * static_cast<std::size_t>((nl - k) % nl);
    }
    grid->conj_[flat] = conj;
  }
  grid->fft_ = std::make_shared<const FftPlan>(grid->mode_counts_, total);
  return grid;
}

GridPtr make_periodic_grid(std::vector<int> mode_counts, std::vector<double> box_lengths) {
  const int n = static_cast<int>(mode_counts.size());
  if (static_cast<int>(box_lengths.size()) != n)
    throw ValidationError(ValidationError::Kind::bad_dimensions,
                          "box_lengths must match mode_counts");
  Matrix b(n, n);
  for (int l = 0; l < n; ++l) {
    if (!(box_lengths[l] > 0.0))
      throw ValidationError(ValidationError::Kind::bad_parameter, "box lengths must be positive");
    b(l, l) = 2.0 * M_PI / box_lengths[l];
  }
  return make_grid(n, n, std::move(mode_counts), std::move(b), Matrix::identity(n));
}

std::vector<double> wavevector(const GridSpec& grid, const ModeIndex& h) {
  const auto w = grid.wavevector(grid.flat_index(h));
  return {w.begin(), w.end()};
}

SpectralField::SpectralField(GridPtr grid)
    : grid_(std::move(grid)), coeffs_(grid_->size(), Complex(0.0, 0.0)) {}

SpectralField::SpectralField(GridPtr grid, std::vector<Complex> coeffs)
    : grid_(std::move(grid)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != grid_->size())
    throw ValidationError(ValidationError::Kind::size_mismatch,
                          "coefficient count does not match the grid");
}

DiagonalOperator build_diag_operator(const GridPtr& grid, double q, double c) {
  if (!(q > 0.0) || !(c > 0.0))
    throw ValidationError(ValidationError::Kind::bad_parameter,
                          "diagonal operator needs q > 0 and c > 0");
  const std::size_t size = grid->size();
  std::vector<double> raw(size);
  const double q2 = q * q;
  for (std::size_t i = 0; i < size; ++i) {
    const double t = q2 - grid->wave_norm_sq(i);
    raw[i] = c * t * t;
  }
  DiagonalOperator op{grid, std::vector<double>(size)};
  for (std::size_t i = 0; i < size; ++i)
    op.entries[i] = 0.5 * (raw[i] + raw[grid->conjugate_index(i)]);
  return op;
}

void to_physical(const SpectralField& field, std::span<double> out,
                 std::vector<Complex>& scratch) {
  const std::size_t size = field.size();
  if (out.size() != size)
    throw ValidationError(ValidationError::Kind::size_mismatch,
                          "physical buffer does not match the grid");
  const double defect = hermitian_defect(field);
  if (defect > 0.0 && defect > 1e-12 * std::sqrt(norm_sq(field)))
    throw ValidationError(ValidationError::Kind::broken_symmetry,
                          "field is not Hermitian: defect " + std::to_string(defect));
  field.grid().fft().synthesize(field.coeffs().data(), out.data(), scratch);
}

PhysicalField to_physical(const SpectralField& field) {
  PhysicalField out{field.grid_ptr(), std::vector<double>(field.size())};
  std::vector<Complex> scratch;
  to_physical(field, out.values, scratch);
  return out;
}

void to_spectral(std::span<const double> values, SpectralField& out) {
  const std::size_t size = out.size();
  if (values.size() != size)
    throw ValidationError(ValidationError::Kind::size_mismatch,
                          "physical values do not match the grid");
  auto coeffs = out.coeffs();
  out.grid().fft().analyze(values.data(), coeffs.data(), out.grid().conjugate_indices());
  const double inv = 1.0 / static_cast<double>(size);
  for (auto& c : coeffs) c *= inv;
  symmetrize_hermitian(out);
}

SpectralField to_spectral(std::span<const double> values, const GridPtr& grid) {
  SpectralField out(grid);
  to_spectral(values, out);
  return out;
}

SpectralField to_spectral(const PhysicalField& field) {
  return to_spectral(field.values, field.grid);
}

SpectralField project_zero_mean(SpectralField field) {
  project_zero_mean_inplace(field);
  return field;
}

void require_same_grid(const SpectralField& u, const SpectralField& v) {
  if (!u.grid().same_layout(v.grid()))
    throw ValidationError(ValidationError::Kind::grid_mismatch,
                          "fields live on different grids");
}

double inner(const SpectralField& u, const SpectralField& v) {
  require_same_grid(u, v);
  return simd::active_kernels().dot(u.raw(), v.raw(), 2 * u.size());
}

double norm_sq(const SpectralField& u) {
  return simd::active_kernels().dot(u.raw(), u.raw(), 2 * u.size());
}

double max_abs(const SpectralField& u) {
  return simd::active_kernels().max_abs_complex(u.raw(), u.size());
}

void symmetrize_hermitian(SpectralField& field) {
  const GridSpec& grid = field.grid();
  for (std::size_t i = 0; i < field.size(); ++i) {
    const std::size_t j = grid.conjugate_index(i);
    if (j < i) continue;
    if (j == i) {
      field[i] = Complex(field[i].real(), 0.0);
      continue;
    }
    const Complex a = field[i];
    const Complex b = std::conj(field[j]);
    const Complex avg = 0.5 * (a + b);
    field[i] = avg;
    field[j] = std::conj(avg);
  }
}

double hermitian_defect(const SpectralField& field) {
  const GridSpec& grid = field.grid();
  double defect = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i)
    defect = std::max(defect, std::norm(field[i] - std::conj(field[grid.conjugate_index(i)])));
  return std::sqrt(defect);
}

}  // namespace mcpfc
