#include "mcpfc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mcpfc {

namespace {

ValidationError bad(const std::string& what) {
  return ValidationError(ValidationError::Kind::bad_parameter, what);
}

void append(std::string& out, const char* fmt, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, fmt, v);
  out += buf;
}

double parse_number(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw bad("slice: " + key + " is not a number");
  return v;
}

int axis_of(char c) {
  if (c >= 'x' && c <= 'z') return c - 'x';
  if (c >= '0' && c <= '9') return c - '0';
  throw bad(std::string("slice: unknown axis '") + c + "'");
}

double default_extent(const GridSpec& grid, const SliceSpec& spec) {
  const int n = grid.lattice_dim(), d = grid.physical_dim();
  const Matrix& B = grid.recip_basis();
  const Matrix& P = grid.projection();
  if (n != d || P != Matrix::identity(n)) return 20.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (r != c && B(r, c) != 0.0) return 20.0;
  double ext = 2.0 * M_PI / B(spec.axis_u, spec.axis_u);
  if (spec.axis_v < d) ext = std::max(ext, 2.0 * M_PI / B(spec.axis_v, spec.axis_v));
  return ext;
}

}  // namespace

std::string trajectory_csv(const RunReport& report) {
  std::string out = kTrajectoryHeader;
  out += '\n';
  for (const auto& r : report.records) {
    out += std::to_string(r.iter) + ',' + std::to_string(r.block) + ',';
    append(out, "%.17g", r.energy);
    out += ',';
    append(out, "%.17g", r.grad_inf);
    out += ',';
    append(out, "%.17g", r.step);
    out += r.restarted ? ",1," : ",0,";
    out += std::to_string(r.backtracks) + ',';
    append(out, "%.3f", r.wall_ms);
    out += '\n';
  }
  return out;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    os << text;
    if (!os) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_trajectory(const std::filesystem::path& path, const RunReport& report) {
  write_text_atomic(path, trajectory_csv(report));
}

nlohmann::json summary_json(const RunReport& report, const nlohmann::json& options) {
  nlohmann::json j;
  j["method"] = report.method;
  j["termination"] = to_string(report.termination);
  j["final_energy"] = report.final_energy;
  j["final_grad_inf"] = report.final_grad_inf;
  j["iterations"] = report.iterations;
  j["energy_evals"] = report.energy_evals;
  j["wall_ms"] = report.wall_ms;
  j["options"] = options;
  return j;
}

void write_summary(const std::filesystem::path& path, const RunReport& report,
                   const nlohmann::json& options) {
  write_text_atomic(path, summary_json(report, options).dump(2) + "\n");
}

SliceSpec parse_slice_spec(const std::string& text) {
  SliceSpec spec;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw bad("slice: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "plane") {
      if (value.size() != 2) throw bad("slice: plane takes two axes, e.g. xy");
      spec.axis_u = axis_of(value[0]);
      spec.axis_v = axis_of(value[1]);
      if (spec.axis_u == spec.axis_v) throw bad("slice: plane axes must differ");
    } else if (key == "extent") {
      spec.extent = parse_number(key, value);
    } else if (key == "points") {
      const double p = parse_number(key, value);
      if (p < 2 || p > 4096 || p != std::floor(p)) throw bad("slice: points must be in [2, 4096]");
      spec.points = static_cast<int>(p);
    } else if (key == "at") {
      spec.origin.assign(1, parse_number(key, value));
    } else if (key == "cutoff") {
      spec.cutoff = parse_number(key, value);
      if (!(spec.cutoff >= 0.0)) throw bad("slice: cutoff must be >= 0");
    } else {
      throw bad("slice: unknown key '" + key + "'");
    }
  }
  return spec;
}

std::string density_slice_csv(const SpectralField& field, const SliceSpec& spec_in) {
  const GridSpec& grid = field.grid();
  const int d = grid.physical_dim();
  SliceSpec spec = spec_in;
  if (spec.axis_u >= d) throw bad("slice: axis beyond the physical dimension");
  const bool flat = d == 1;
  if (flat) spec.axis_v = d;  // unused
  else if (spec.axis_v >= d) throw bad("slice: axis beyond the physical dimension");
  if (spec.extent <= 0.0) spec.extent = default_extent(grid, spec);

  std::vector<double> origin(d, spec.origin.empty() ? 0.0 : spec.origin[0]);
  origin[spec.axis_u] = 0.0;
  if (!flat) origin[spec.axis_v] = 0.0;

  const int P = spec.points;
  const int Pv = flat ? 1 : P;
  const double h = spec.extent / (P - 1);
  const double cmax = max_abs(field);

  std::vector<double> value(static_cast<std::size_t>(P) * Pv, 0.0);
  std::vector<Complex> eu(P), ev(Pv);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Complex c = field[i];
    if (std::abs(c) == 0.0 || std::abs(c) < spec.cutoff * cmax) continue;
    const auto k = grid.wavevector(i);
    double phase0 = 0.0;
    for (int l = 0; l < d; ++l) phase0 += k[l] * origin[l];
    const Complex c0 = c * std::polar(1.0, phase0);
    for (int a = 0; a < P; ++a) eu[a] = std::polar(1.0, k[spec.axis_u] * h * a);
    for (int b = 0; b < Pv; ++b) ev[b] = flat ? Complex(1.0) : std::polar(1.0, k[spec.axis_v] * h * b);
    for (int a = 0; a < P; ++a) {
      const Complex ca = c0 * eu[a];
      double* row = value.data() + static_cast<std::size_t>(a) * Pv;
      for (int b = 0; b < Pv; ++b) row[b] += ca.real() * ev[b].real() - ca.imag() * ev[b].imag();
    }
  }

  std::string out = "x,y,value\n";
  out.reserve(out.size() + value.size() * 40);
  for (int a = 0; a < P; ++a)
    for (int b = 0; b < Pv; ++b) {
      append(out, "%.10g", h * a);
      out += ',';
      append(out, "%.10g", flat ? 0.0 : h * b);
      out += ',';
      append(out, "%.10g", value[static_cast<std::size_t>(a) * Pv + b]);
      out += '\n';
    }
  return out;
}

}  // namespace mcpfc
