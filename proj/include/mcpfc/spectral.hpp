#pragma once

// Truncated Fourier discretization of (quasi)periodic fields.
//
// A field on a d-dimensional physical space is represented as a slice of an
// n-dimensional periodic field (n >= d): phi(r) = sum_h c(h) exp(i (P B h).r),
// with h ranging over the n-dimensional mode box [-N_l/2, N_l/2). For n == d
// and P = I this is the ordinary Fourier spectral method.
//
// Storage order of coefficients ("FFT frequency layout"): the flat index of h
// is row-major over the n dimensions (the last dimension varies fastest) with
// per-dimension index k_l = h_l mod N_l, i.e. k_l = h_l for h_l >= 0 and
// k_l = h_l + N_l for h_l < 0. Coefficients are true Fourier coefficients:
// synthesis applies no scaling and analysis divides by the grid size.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcpfc {

using Complex = std::complex<double>;

class ValidationError : public std::invalid_argument {
 public:
  enum class Kind {
    bad_dimensions,
    odd_mode_count,
    singular_basis,
    rank_deficient_projection,
    out_of_range,
    size_mismatch,
    grid_mismatch,
    bad_parameter,
    broken_symmetry,
  };

  ValidationError(Kind kind, const std::string& what)
      : std::invalid_argument(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Dense row-major matrix, only used for the small lattice matrices.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
  Matrix(int r, int c, std::vector<double> values);

  static Matrix identity(int n);

  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

double determinant(const Matrix& m);
int matrix_rank(const Matrix& m, double rel_tol = 1e-12);

using ModeIndex = std::vector<int>;

class FftPlan;

class GridSpec {
 public:
  int lattice_dim() const { return n_; }
  int physical_dim() const { return d_; }
  std::span<const int> mode_counts() const { return mode_counts_; }
  const Matrix& recip_basis() const { return basis_; }
  const Matrix& projection() const { return projection_; }

  // Number of modes (= number of collocation nodes).
  std::size_t size() const { return size_; }

  bool contains(const ModeIndex& h) const;
  std::size_t flat_index(const ModeIndex& h) const;
  ModeIndex mode_index(std::size_t flat) const;
  // Flat index of -h modulo the mode box.
  std::size_t conjugate_index(std::size_t flat) const { return conj_[flat]; }
  const std::size_t* conjugate_indices() const { return conj_.data(); }

  // P B h for the mode stored at `flat`.
  std::span<const double> wavevector(std::size_t flat) const {
    return {wavevectors_.data() + flat * d_, static_cast<std::size_t>(d_)};
  }
  double wave_norm_sq(std::size_t flat) const { return wave_norm_sq_[flat]; }

  const FftPlan& fft() const { return *fft_; }

  // Same lattice, projection and mode box.
  bool same_layout(const GridSpec& other) const;

 private:
  friend std::shared_ptr<const GridSpec> make_grid(int, int, std::vector<int>, Matrix, Matrix);

  int n_ = 0;
  int d_ = 0;
  std::vector<int> mode_counts_;
  Matrix basis_;
  Matrix projection_;
  std::size_t size_ = 0;
  std::vector<double> wavevectors_;
  std::vector<double> wave_norm_sq_;
  std::vector<std::size_t> conj_;
  std::shared_ptr<const FftPlan> fft_;
};

using GridPtr = std::shared_ptr<const GridSpec>;

// Validates the lattice description and precomputes P B h for every mode.
// Throws ValidationError (odd_mode_count, singular_basis,
// rank_deficient_projection, bad_dimensions).
GridPtr make_grid(int n, int d, std::vector<int> mode_counts, Matrix recip_basis,
                  Matrix projection);

// Plain d-dimensional periodic grid: B = diag(2 pi / L_l), P = I.
GridPtr make_periodic_grid(std::vector<int> mode_counts, std::vector<double> box_lengths);

std::vector<double> wavevector(const GridSpec& grid, const ModeIndex& h);

class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(GridPtr grid);
  SpectralField(GridPtr grid, std::vector<Complex> coeffs);

  const GridSpec& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return coeffs_.size(); }

  Complex& operator[](std::size_t i) { return coeffs_[i]; }
  const Complex& operator[](std::size_t i) const { return coeffs_[i]; }
  Complex& at(const ModeIndex& h) { return coeffs_[grid_->flat_index(h)]; }
  const Complex& at(const ModeIndex& h) const { return coeffs_[grid_->flat_index(h)]; }

  std::span<Complex> coeffs() { return coeffs_; }
  std::span<const Complex> coeffs() const { return coeffs_; }

  // Interleaved (re, im) view used by the SIMD kernels.
  double* raw() { return reinterpret_cast<double*>(coeffs_.data()); }
  const double* raw() const { return reinterpret_cast<const double*>(coeffs_.data()); }

 private:
  GridPtr grid_;
  std::vector<Complex> coeffs_;
};

struct PhysicalField {
  GridPtr grid;
  std::vector<double> values;
};

struct DiagonalOperator {
  GridPtr grid;
  std::vector<double> entries;
};

// entry(h) = c (q^2 - |P B h|^2)^2. On the Nyquist planes, where -h is not
// representable, the entry is averaged with that of the aliased partner so
// the operator commutes with conjugation (it acts on real fields only).
DiagonalOperator build_diag_operator(const GridPtr& grid, double q, double c);

// Synthesis onto the n-dimensional collocation grid. Throws
// ValidationError(broken_symmetry) when the imaginary residue exceeds
// 1e-12 * ||field||.
PhysicalField to_physical(const SpectralField& field);
void to_physical(const SpectralField& field, std::span<double> out,
                 std::vector<Complex>& scratch);

// Analysis (divides by the grid size); output is symmetrized to exact
// Hermitian form. No zero-mean projection.
SpectralField to_spectral(std::span<const double> values, const GridPtr& grid);
SpectralField to_spectral(const PhysicalField& field);
void to_spectral(std::span<const double> values, SpectralField& out);

SpectralField project_zero_mean(SpectralField field);
inline void project_zero_mean_inplace(SpectralField& field) { field[0] = Complex(0.0, 0.0); }

// Re sum_h conj(u_h) v_h.
double inner(const SpectralField& u, const SpectralField& v);
double norm_sq(const SpectralField& u);
double max_abs(const SpectralField& u);

// c(h) <- (c(h) + conj(c(-h))) / 2.
void symmetrize_hermitian(SpectralField& field);
// max_h |c(h) - conj(c(-h))|.
double hermitian_defect(const SpectralField& field);

void require_same_grid(const SpectralField& u, const SpectralField& v);

}  // namespace mcpfc
