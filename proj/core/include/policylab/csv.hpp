#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "policylab/core.hpp"

namespace policylab {

/// Shortest round-trip form is not required; every real is written with 17
/// significant digits, which is exact for IEEE doubles.
std::string format_real(double x);

/// Parses a whole cell as a real. Throws ParseError on trailing garbage.
double parse_real(std::string_view cell, std::string_view what);

/// Dataset table with header `id,y,d,e,x1..xd,m1..mk` and an optional `a`
/// column carrying the latent factor. Columns are matched by name. Empty `m`
/// cells are missing readings; every other cell must be present.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);

void write_dataset_csv(std::ostream& out, const Dataset& d);
std::string dataset_csv(const Dataset& d);

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so readers never see a partial file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace policylab
