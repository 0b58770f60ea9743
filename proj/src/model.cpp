#include "mcpfc/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcpfc/simd/kernels.hpp"

namespace mcpfc {

namespace {

std::string degrees_str(const std::vector<int>& deg) {
  std::ostringstream os;
  os << "tau(";
  for (std::size_t i = 0; i < deg.size(); ++i) os << (i ? "," : "") << deg[i];
  os << ')';
  return os.str();
}

ValidationError bad(const std::string& what) {
  return ValidationError(ValidationError::Kind::bad_parameter, what);
}

}  // namespace

void ModelSpec::validate() const {
  if (s < 1) throw bad("model.s must be >= 1");
  if (static_cast<int>(q.size()) != s) throw bad("model.q must have s entries");
  for (int j = 0; j < s; ++j)
    if (!(q[j] > 0.0) || !std::isfinite(q[j]))
      throw bad("model.q[" + std::to_string(j) + "] must be positive");
  if (!(c > 0.0) || !std::isfinite(c)) throw bad("model.c must be positive");
  for (const auto& [deg, value] : tau) {
    if (static_cast<int>(deg.size()) != s)
      throw bad(degrees_str(deg) + " must have s degrees");
    int total = 0;
    for (int i : deg) {
      if (i < 0) throw bad(degrees_str(deg) + " has a negative degree");
      total += i;
    }
    if (total < 1 || total > 4) throw bad(degrees_str(deg) + " total degree must be in [1, 4]");
    if (!std::isfinite(value)) throw bad(degrees_str(deg) + " is not finite");
  }
}

CmshModel::CmshModel(ModelSpec spec, GridPtr grid)
    : spec_(std::move(spec)), grid_(std::move(grid)) {
  spec_.validate();
  for (int j = 0; j < spec_.s; ++j) ops_.push_back(build_diag_operator(grid_, spec_.q[j], spec_.c));

  derivative_terms_.resize(spec_.s);
  for (const auto& [deg, value] : spec_.tau) {
    if (value == 0.0) continue;
    Term t{value, {0, 0, 0, 0}, 0};
    for (int j = 0; j < spec_.s; ++j)
      for (int k = 0; k < deg[j]; ++k) t.factors[t.count++] = j;
    energy_terms_.push_back(t);

    for (int j = 0; j < spec_.s; ++j) {
      if (deg[j] == 0) continue;
      Term d{value * deg[j], {0, 0, 0, 0}, 0};
      bool dropped = false;
      for (int f = 0; f < t.count; ++f) {
        if (!dropped && t.factors[f] == j) {
          dropped = true;
          continue;
        }
        d.factors[d.count++] = t.factors[f];
      }
      derivative_terms_[j].push_back(d);
    }
  }
}

double CmshModel::quad_energy(int j, const SpectralField& phi) const {
  return 0.5 * simd::active_kernels().diag_quadratic(ops_[j].entries.data(), phi.raw(), phi.size());
}

double CmshModel::bulk_energy(std::span<const double* const> phys) const {
  const auto& k = simd::active_kernels();
  const std::size_t n = grid_->size();
  std::vector<double> acc(n, 0.0);
  const double* f[4];
  for (const Term& t : energy_terms_) {
    for (int i = 0; i < t.count; ++i) f[i] = phys[t.factors[i]];
    k.product_accumulate(acc.data(), t.coef, f, t.count, n);
  }
  return k.sum(acc.data(), n) / static_cast<double>(n);
}

void CmshModel::bulk_derivative(std::span<const double* const> phys, int j,
                                std::span<double> out) const {
  const auto& k = simd::active_kernels();
  std::fill(out.begin(), out.end(), 0.0);
  const double* f[4];
  for (const Term& t : derivative_terms_[j]) {
    for (int i = 0; i < t.count; ++i) f[i] = phys[t.factors[i]];
    k.product_accumulate(out.data(), t.coef, f, t.count, out.size());
  }
}

void CmshModel::check_state(const State& state) const {
  if (static_cast<int>(state.size()) != spec_.s)
    throw ValidationError(ValidationError::Kind::size_mismatch,
                          "state has " + std::to_string(state.size()) +
                              " components, model expects " + std::to_string(spec_.s));
  for (const auto& phi : state)
    if (!phi.grid().same_layout(*grid_))
      throw ValidationError(ValidationError::Kind::grid_mismatch,
                            "state component is not on the model grid");
}

namespace {

std::vector<std::vector<double>> physical_fields(const State& state) {
  std::vector<std::vector<double>> phys;
  std::vector<Complex> scratch;
  for (const auto& phi : state) {
    phys.emplace_back(phi.size());
    to_physical(phi, phys.back(), scratch);
  }
  return phys;
}

std::vector<const double*> pointers(const std::vector<std::vector<double>>& phys) {
  std::vector<const double*> p;
  for (const auto& v : phys) p.push_back(v.data());
  return p;
}

}  // namespace

EnergyBreakdown energy(const CmshModel& model, const State& state) {
  model.check_state(state);
  EnergyBreakdown out;
  for (int j = 0; j < model.components(); ++j) out.quad.push_back(model.quad_energy(j, state[j]));
  const auto phys = physical_fields(state);
  out.bulk = model.bulk_energy(pointers(phys));
  out.total = out.bulk;
  for (double g : out.quad) out.total += g;
  return out;
}

SpectralField bulk_gradient(const CmshModel& model, const State& state, int j) {
  model.check_state(state);
  if (j < 0 || j >= model.components())
    throw ValidationError(ValidationError::Kind::out_of_range, "block index out of range");
  const auto phys = physical_fields(state);
  std::vector<double> deriv(model.grid().size());
  model.bulk_derivative(pointers(phys), j, deriv);
  return to_spectral(deriv, model.grid_ptr());
}

Residual residual(const CmshModel& model, const State& state) {
  model.check_state(state);
  const auto phys = physical_fields(state);
  const auto ptrs = pointers(phys);
  const auto& k = simd::active_kernels();
  Residual out;
  std::vector<double> deriv(model.grid().size());
  for (int j = 0; j < model.components(); ++j) {
    model.bulk_derivative(ptrs, j, deriv);
    SpectralField g = to_spectral(deriv, model.grid_ptr());
    k.diag_axpy(model.op(j).entries.data(), state[j].raw(), g.raw(), g.raw(), g.size());
    project_zero_mean_inplace(g);
    out.inf_norm = std::max(out.inf_norm, max_abs(g));
    out.blocks.push_back(std::move(g));
  }
  return out;
}

ModelWorkspace::ModelWorkspace(const CmshModel& model)
    : model_(model),
      phys_(model.components(), std::vector<double>(model.grid().size())),
      ptrs_(model.components()),
      quad_(model.components(), 0.0),
      trial_(model.grid().size()),
      deriv_(model.grid().size()) {
  for (int j = 0; j < model.components(); ++j) ptrs_[j] = phys_[j].data();
}

void ModelWorkspace::load(const State& state) {
  model_.check_state(state);
  state_ = state;
  for (int j = 0; j < model_.components(); ++j) {
    to_physical(state[j], phys_[j], scratch_);
    quad_[j] = model_.quad_energy(j, state[j]);
  }
}

void ModelWorkspace::replace(int j, const SpectralField& phi) {
  state_[j] = phi;
  to_physical(phi, phys_[j], scratch_);
  quad_[j] = model_.quad_energy(j, phi);
}

double ModelWorkspace::bulk_with(int j, const double* trial) const {
  std::vector<const double*> p = ptrs_;
  if (j >= 0) p[j] = trial;
  return model_.bulk_energy(p);
}

double ModelWorkspace::energy() const {
  double e = bulk_with(-1, nullptr);
  for (double q : quad_) e += q;
  return e;
}

double ModelWorkspace::energy_with(int j, const SpectralField& z) {
  ++evals_;
  to_physical(z, trial_, scratch_);
  double e = bulk_with(j, trial_.data());
  for (int l = 0; l < model_.components(); ++l)
    e += l == j ? model_.quad_energy(j, z) : quad_[l];
  return e;
}

void ModelWorkspace::gradient_into(int j, SpectralField& out) {
  model_.bulk_derivative(ptrs_, j, deriv_);
  to_spectral(deriv_, out);
}

SpectralField ModelWorkspace::bulk_gradient(int j) {
  SpectralField g(model_.grid_ptr());
  gradient_into(j, g);
  return g;
}

SpectralField ModelWorkspace::bulk_gradient_with(int j, const SpectralField& z) {
  to_physical(z, trial_, scratch_);
  const double* saved = ptrs_[j];
  ptrs_[j] = trial_.data();
  SpectralField g(model_.grid_ptr());
  gradient_into(j, g);
  ptrs_[j] = saved;
  return g;
}

Residual ModelWorkspace::residual(std::vector<SpectralField>* bulk) {
  const auto& k = simd::active_kernels();
  Residual out;
  if (bulk) bulk->clear();
  for (int j = 0; j < model_.components(); ++j) {
    SpectralField g = bulk_gradient(j);
    if (bulk) bulk->push_back(g);
    k.diag_axpy(model_.op(j).entries.data(), state_[j].raw(), g.raw(), g.raw(), g.size());
    project_zero_mean_inplace(g);
    out.inf_norm = std::max(out.inf_norm, max_abs(g));
    out.blocks.push_back(std::move(g));
  }
  return out;
}

State random_state(const GridPtr& grid, int s, std::mt19937_64& rng, double amplitude,
                   double decay) {
  std::normal_distribution<double> normal(0.0, 1.0);
  State state;
  for (int j = 0; j < s; ++j) {
    SpectralField phi(grid);
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const double w = amplitude * std::exp(-decay * grid->wave_norm_sq(i));
      phi[i] = Complex(w * normal(rng), w * normal(rng));
    }
    symmetrize_hermitian(phi);
    project_zero_mean_inplace(phi);
    state.push_back(std::move(phi));
  }
  return state;
}

bool is_feasible(const State& state, double tol) {
  for (const auto& phi : state) {
    if (phi[0] != Complex(0.0, 0.0)) return false;
    if (hermitian_defect(phi) > tol) return false;
  }
  return true;
}

GradCheckResult gradient_check(const CmshModel& model, int samples, std::uint64_t seed,
                               double eps, double gradient_scale) {
  std::mt19937_64 rng(seed);
  GradCheckResult result;
  const int s = model.components();
  for (int n = 0; n < samples; ++n) {
    const State x = random_state(model.grid_ptr(), s, rng);
    const State dir = random_state(model.grid_ptr(), s, rng, 1.0);
    const Residual r = residual(model, x);
    double analytic = 0.0;
    for (int j = 0; j < s; ++j) analytic += inner(r.blocks[j], dir[j]);
    analytic *= gradient_scale;

    State plus = x;
    State minus = x;
    for (int j = 0; j < s; ++j) {
      const auto& kt = simd::active_kernels();
      kt.axpby(1.0, x[j].raw(), eps, dir[j].raw(), plus[j].raw(), 2 * x[j].size());
      kt.axpby(1.0, x[j].raw(), -eps, dir[j].raw(), minus[j].raw(), 2 * x[j].size());
    }
    const double fd = (energy(model, plus).total - energy(model, minus).total) / (2.0 * eps);
    const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-12});
    result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic - fd) / scale);
    ++result.samples;
  }
  return result;
}

}  // namespace mcpfc
