#pragma once

#include <string>

#include "gpgeo/types.hpp"

namespace gpgeo {

/// Numeric CSV table. Blank lines, lines starting with '#' and a leading header
/// row (first field not a number) are skipped; every remaining row must have the
/// same number of fields. Throws ParseError.
Matrix<double> read_csv_matrix(const std::string& path);

/// Locations, one row per point and d columns.
Design<double> read_locations(const std::string& path);

/// Observations as a single-column CSV.
Vector<double> read_observations(const std::string& path);

/// Writes through a temporary file in the same directory and renames it into place,
/// so readers never see a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

/// Little-endian float64, row-major (one row per location).
void write_binary_matrix(const std::string& path, const Matrix<double>& values);

}  // namespace gpgeo
