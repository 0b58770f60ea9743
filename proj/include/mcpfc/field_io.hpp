#pragma once

// Binary field dump ("MCPF"), all integers and floats little-endian:
//
//   char[4]   magic "MCPF"
//   uint32    format version (1)
//   uint32    n (lattice dimension)
//   uint32    d (physical dimension)
//   uint32    s (number of components)
//   uint32    mode_counts[n]
//   float64   coefficients: for each component, for each mode in the
//             documented flat order, real part then imaginary part.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mcpfc/spectral.hpp"

namespace mcpfc {

inline constexpr std::uint32_t kFieldFormatVersion = 1;

struct FieldDump {
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  std::vector<std::uint32_t> mode_counts;
  // components[j][flat]
  std::vector<std::vector<Complex>> components;
};

void write_field_dump(const std::filesystem::path& path,
                      const std::vector<SpectralField>& components);
FieldDump read_field_dump(const std::filesystem::path& path);

// Rebinds a dump to a grid; throws ValidationError when the layout differs.
std::vector<SpectralField> fields_from_dump(const FieldDump& dump, const GridPtr& grid);

}  // namespace mcpfc
