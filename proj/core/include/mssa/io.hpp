#pragma once

#include <string>

#include "mssa/matrix.hpp"

namespace mssa {

// Binary matrix format (bit-exact round trips):
//   bytes 0..7   magic "MSSAMAT\0"
//   bytes 8..11  version, uint32 little-endian (currently 1)
//   bytes 12..19 rows, uint64 little-endian
//   bytes 20..27 cols, uint64 little-endian
//   payload      rows*cols IEEE-754 float64, column-major, little-endian
void write_matrix_binary(const std::string& path, const Matrix& M);
Matrix read_matrix_binary(const std::string& path);

// CSV alternative: one matrix row per line, comma separated, values
// rendered with 17 significant digits (round trips within 1e-15; exact
// for doubles on round-tripping decimal readers).
void write_matrix_csv(const std::string& path, const Matrix& M);
Matrix read_matrix_csv(const std::string& path);

// Dispatch on extension: ".csv" -> CSV, anything else -> binary.
void write_matrix(const std::string& path, const Matrix& M);
Matrix read_matrix(const std::string& path);

}  // namespace mssa
