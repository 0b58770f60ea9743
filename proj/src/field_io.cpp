#include "mcpfc/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mcpfc {

namespace {

static_assert(std::endian::native == std::endian::little,
              "field dumps are written in native order; big-endian hosts need byte swaps");

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("truncated field dump");
  return v;
}

}  // namespace

void write_field_dump(const std::filesystem::path& path,
                      const std::vector<SpectralField>& components) {
  if (components.empty()) throw std::invalid_argument("no components to dump");
  const GridSpec& grid = components.front().grid();
  for (const auto& c : components) require_same_grid(components.front(), c);

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    os.write("MCPF", 4);
    put_u32(os, kFieldFormatVersion);
    put_u32(os, static_cast<std::uint32_t>(grid.lattice_dim()));
    put_u32(os, static_cast<std::uint32_t>(grid.physical_dim()));
    put_u32(os, static_cast<std::uint32_t>(components.size()));
    for (int nl : grid.mode_counts()) put_u32(os, static_cast<std::uint32_t>(nl));
    for (const auto& c : components)
      os.write(reinterpret_cast<const char*>(c.raw()),
               static_cast<std::streamsize>(c.size() * 2 * sizeof(double)));
    if (!os) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

FieldDump read_field_dump(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MCPF", 4) != 0)
    throw std::runtime_error(path.string() + " is not an MCPF field dump");
  const std::uint32_t version = get_u32(is);
  if (version != kFieldFormatVersion)
    throw std::runtime_error("unsupported field dump version " + std::to_string(version));

  FieldDump dump;
  dump.n = get_u32(is);
  dump.d = get_u32(is);
  const std::uint32_t s = get_u32(is);
  if (dump.n == 0 || dump.n > 16 || dump.d == 0 || dump.d > dump.n || s == 0 || s > 1024)
    throw std::runtime_error("corrupt field dump header");
  std::size_t size = 1;
  for (std::uint32_t l = 0; l < dump.n; ++l) {
    dump.mode_counts.push_back(get_u32(is));
    size *= dump.mode_counts.back();
  }
  dump.components.assign(s, std::vector<Complex>(size));
  for (auto& c : dump.components) {
    is.read(reinterpret_cast<char*>(c.data()),
            static_cast<std::streamsize>(size * 2 * sizeof(double)));
    if (!is) throw std::runtime_error("truncated field dump");
  }
  return dump;
}

std::vector<SpectralField> fields_from_dump(const FieldDump& dump, const GridPtr& grid) {
  bool match = static_cast<int>(dump.n) == grid->lattice_dim() &&
               static_cast<int>(dump.d) == grid->physical_dim();
  for (std::size_t l = 0; match && l < dump.mode_counts.size(); ++l)
    match = static_cast<int>(dump.mode_counts[l]) == grid->mode_counts()[l];
  if (!match)
    throw ValidationError(ValidationError::Kind::grid_mismatch,
                          "field dump layout does not match the grid");
  std::vector<SpectralField> out;
  for (const auto& c : dump.components) out.emplace_back(grid, c);
  return out;
}

}  // namespace mcpfc
