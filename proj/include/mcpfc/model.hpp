#pragma once

// Discretized coupled-mode Swift-Hohenberg energy
//
//   E(Phi) = sum_j 1/2 <phi_j, D_j phi_j> + F(Phi),
//   F(Phi) = mean over the collocation grid of
//            sum_tau tau_{i_1..i_s} prod_j phi_j(r)^{i_j},
//
// with D_j = c (q_j^2 - |P B h|^2)^2 and every phi_j constrained to zero mean.
// Gradients are exact gradients of this discrete energy with respect to the
// real inner product Re <u, v>.

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "mcpfc/spectral.hpp"

namespace mcpfc {

struct ModelSpec {
  int s = 1;
  std::vector<double> q;
  double c = 1.0;
  // multi-degree (i_1, ..., i_s) -> tau
  std::map<std::vector<int>, double> tau;

  // Throws ValidationError(bad_parameter) naming the offending entry.
  void validate() const;
};

using State = std::vector<SpectralField>;

struct EnergyBreakdown {
  double total = 0.0;
  std::vector<double> quad;
  double bulk = 0.0;
};

struct Residual {
  std::vector<SpectralField> blocks;
  double inf_norm = 0.0;
};

class CmshModel {
 public:
  CmshModel(ModelSpec spec, GridPtr grid);

  const ModelSpec& spec() const { return spec_; }
  const GridSpec& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int components() const { return spec_.s; }
  const DiagonalOperator& op(int j) const { return ops_[j]; }

  // 1/2 <phi, D_j phi>
  double quad_energy(int j, const SpectralField& phi) const;

  // Pointwise kernels on physical fields; phys[j] points at component j.
  double bulk_energy(std::span<const double* const> phys) const;
  void bulk_derivative(std::span<const double* const> phys, int j,
                       std::span<double> out) const;

  void check_state(const State& state) const;

 private:
  struct Term {
    double coef;
    int factors[4];
    int count;
  };

  ModelSpec spec_;
  GridPtr grid_;
  std::vector<DiagonalOperator> ops_;
  std::vector<Term> energy_terms_;
  std::vector<std::vector<Term>> derivative_terms_;
};

EnergyBreakdown energy(const CmshModel& model, const State& state);

// Spectral transform of d(bulk density)/d(phi_j); Hermitian, not projected.
SpectralField bulk_gradient(const CmshModel& model, const State& state, int j);

// Per block P1(D_j phi_j + grad_j F); inf_norm is the max coefficient modulus.
Residual residual(const CmshModel& model, const State& state);

// Zero-mean Hermitian random state; mode h gets amplitude ~ exp(-decay |PBh|^2).
State random_state(const GridPtr& grid, int s, std::mt19937_64& rng,
                   double amplitude = 0.2, double decay = 0.3);

bool is_feasible(const State& state, double tol = 1e-12);

// Physical-space copies of a state's components, kept in sync by the caller,
// for repeated evaluations that change one block at a time.
class ModelWorkspace {
 public:
  explicit ModelWorkspace(const CmshModel& model);

  void load(const State& state);
  void replace(int j, const SpectralField& phi);

  double energy() const;
  double bulk() const { return bulk_with(-1, nullptr); }
  // Energy with block j replaced by z (the loaded state is unchanged).
  double energy_with(int j, const SpectralField& z);
  // grad_j F at the loaded state, or with block j replaced by z.
  SpectralField bulk_gradient(int j);
  SpectralField bulk_gradient_with(int j, const SpectralField& z);
  // Residual of the loaded state; `bulk` receives the unprojected bulk
  // gradients when non-null.
  Residual residual(std::vector<SpectralField>* bulk = nullptr);

  long energy_evals() const { return evals_; }

 private:
  double bulk_with(int j, const double* trial) const;
  void gradient_into(int j, SpectralField& out);

  const CmshModel& model_;
  State state_;
  std::vector<std::vector<double>> phys_;
  std::vector<const double*> ptrs_;
  std::vector<double> quad_;
  std::vector<double> trial_;
  std::vector<double> deriv_;
  std::vector<Complex> scratch_;
  long evals_ = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  int samples = 0;
};

// Compares <residual, delta> with central differences of the energy on
// `samples` random states/directions. `gradient_scale` != 1 corrupts the
// analytic side (negative control).
GradCheckResult gradient_check(const CmshModel& model, int samples, std::uint64_t seed,
                               double eps = 1e-5, double gradient_scale = 1.0);

}  // namespace mcpfc
