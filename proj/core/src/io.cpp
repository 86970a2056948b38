#include "mssa/io.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "mssa/errors.hpp"

namespace mssa {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'S', 'S', 'A',
                                        'M', 'A', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

// Serialization assumes a little-endian host with IEEE-754 doubles.
static_assert(sizeof(double) == 8);

bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() &&
         s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

void write_matrix_binary(const std::string& path, const Matrix& M) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw io_error("cannot open for writing: " + path);
  }
  out.write(kMagic.data(), kMagic.size());
  const std::uint32_t version = kVersion;
  const std::uint64_t rows = static_cast<std::uint64_t>(M.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(M.cols());
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(M.data()),
            static_cast<std::streamsize>(sizeof(double) * M.size()));
  if (!out) {
    throw io_error("write failed: " + path);
  }
}

Matrix read_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw io_error("cannot open for reading: " + path);
  }
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw io_error("not a matrix file (bad magic): " + path);
  }
  std::uint32_t version = 0;
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || version != kVersion) {
    throw io_error("unsupported matrix file version in " + path);
  }
  Matrix M(static_cast<Index>(rows), static_cast<Index>(cols));
  in.read(reinterpret_cast<char*>(M.data()),
          static_cast<std::streamsize>(sizeof(double) * M.size()));
  if (!in) {
    throw io_error("truncated matrix file: " + path);
  }
  if (!M.allFinite()) {
    throw io_error("matrix file contains non-finite values: " + path);
  }
  return M;
}

void write_matrix_csv(const std::string& path, const Matrix& M) {
  std::ofstream out(path);
  if (!out) {
    throw io_error("cannot open for writing: " + path);
  }
  char buf[40];
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", M(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) {
    throw io_error("write failed: " + path);
  }
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw io_error("cannot open for reading: " + path);
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw io_error("bad CSV value '" + cell + "' in " + path);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw io_error("ragged CSV rows in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw io_error("empty CSV matrix: " + path);
  }
  Matrix M(static_cast<Index>(rows.size()),
           static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  if (!M.allFinite()) {
    throw io_error("matrix file contains non-finite values: " + path);
  }
  return M;
}

void write_matrix(const std::string& path, const Matrix& M) {
  if (has_suffix(path, ".csv")) {
    write_matrix_csv(path, M);
  } else {
    write_matrix_binary(path, M);
  }
}

Matrix read_matrix(const std::string& path) {
  if (has_suffix(path, ".csv")) {
    return read_matrix_csv(path);
  }
  return read_matrix_binary(path);
}

}  // namespace mssa
