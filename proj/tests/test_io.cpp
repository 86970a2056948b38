#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "mssa/errors.hpp"
#include "mssa/io.hpp"
#include "mssa/rng.hpp"

namespace fs = std::filesystem;
using mssa::Index;
using mssa::Matrix;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mssa_io_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

Matrix sample_matrix() {
  mssa::Rng rng(404);
  Matrix M(7, 5);
  for (Index j = 0; j < 5; ++j) {
    for (Index i = 0; i < 7; ++i) M(i, j) = rng.normal() * 1e3;
  }
  M(0, 0) = 0.0;
  M(1, 0) = -0.0;
  M(2, 0) = 1e-300;   // subnormal-adjacent magnitude
  M(3, 0) = -1e300;
  M(4, 0) = 1.0 / 3.0;
  return M;
}

}  // namespace

TEST_CASE("binary round trip is bit exact") {
  TempDir dir;
  const Matrix M = sample_matrix();
  mssa::write_matrix_binary(dir.file("m.mat"), M);
  const Matrix R = mssa::read_matrix_binary(dir.file("m.mat"));
  REQUIRE(R.rows() == M.rows());
  REQUIRE(R.cols() == M.cols());
  for (Index j = 0; j < M.cols(); ++j) {
    for (Index i = 0; i < M.rows(); ++i) {
      // Bit-level comparison, including signed zeros.
      CHECK(std::memcmp(&R(i, j), &M(i, j), sizeof(double)) == 0);
    }
  }
  // Writing the same matrix twice yields identical files.
  mssa::write_matrix_binary(dir.file("m2.mat"), M);
  std::ifstream a(dir.file("m.mat"), std::ios::binary);
  std::ifstream b(dir.file("m2.mat"), std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)),
                       std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(b)),
                       std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("csv round trip preserves values") {
  TempDir dir;
  const Matrix M = sample_matrix();
  mssa::write_matrix_csv(dir.file("m.csv"), M);
  const Matrix R = mssa::read_matrix_csv(dir.file("m.csv"));
  REQUIRE(R.rows() == M.rows());
  REQUIRE(R.cols() == M.cols());
  for (Index j = 0; j < M.cols(); ++j) {
    for (Index i = 0; i < M.rows(); ++i) {
      const double scale = std::max(1.0, std::abs(M(i, j)));
      CHECK(std::abs(R(i, j) - M(i, j)) <= 1e-15 * scale);
    }
  }
}

TEST_CASE("extension dispatch picks the right format") {
  TempDir dir;
  const Matrix M = sample_matrix();
  mssa::write_matrix(dir.file("m.csv"), M);
  mssa::write_matrix(dir.file("m.mat"), M);

  // The CSV file is readable text; the binary file starts with the magic.
  std::ifstream txt(dir.file("m.csv"));
  std::string first;
  std::getline(txt, first);
  CHECK(first.find(',') != std::string::npos);
  std::ifstream bin(dir.file("m.mat"), std::ios::binary);
  char magic[8] = {};
  bin.read(magic, 8);
  CHECK(std::string(magic, 7) == "MSSAMAT");

  CHECK(mssa::read_matrix(dir.file("m.csv")).rows() == M.rows());
  CHECK(mssa::read_matrix(dir.file("m.mat")).cols() == M.cols());
}

TEST_CASE("missing and malformed files raise io errors") {
  TempDir dir;
  CHECK_THROWS_AS(mssa::read_matrix(dir.file("absent.mat")), mssa::io_error);
  CHECK_THROWS_AS(mssa::read_matrix(dir.file("absent.csv")), mssa::io_error);

  // Wrong magic.
  {
    std::ofstream out(dir.file("bad.mat"), std::ios::binary);
    out << "NOTAMATRIXFILE";
  }
  CHECK_THROWS_AS(mssa::read_matrix_binary(dir.file("bad.mat")),
                  mssa::io_error);

  // Truncated payload.
  {
    const Matrix M = sample_matrix();
    mssa::write_matrix_binary(dir.file("trunc.mat"), M);
    fs::resize_file(dir.file("trunc.mat"), 40);
  }
  CHECK_THROWS_AS(mssa::read_matrix_binary(dir.file("trunc.mat")),
                  mssa::io_error);

  // Non-numeric CSV cell and ragged rows.
  {
    std::ofstream out(dir.file("bad.csv"));
    out << "1,2\n3,oops\n";
  }
  CHECK_THROWS_AS(mssa::read_matrix_csv(dir.file("bad.csv")), mssa::io_error);
  {
    std::ofstream out(dir.file("ragged.csv"));
    out << "1,2\n3\n";
  }
  CHECK_THROWS_AS(mssa::read_matrix_csv(dir.file("ragged.csv")),
                  mssa::io_error);
}

TEST_CASE("non-finite payloads are rejected on read") {
  TempDir dir;
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = 1.0;
  mssa::write_matrix_binary(dir.file("nan.mat"), M);
  // Corrupt one payload double into a NaN bit pattern.
  {
    std::fstream f(dir.file("nan.mat"),
                   std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(28);  // first payload byte: 8 magic + 4 version + 16 dims
    const std::uint64_t nan_bits = 0x7ff8000000000000ull;
    f.write(reinterpret_cast<const char*>(&nan_bits), 8);
  }
  CHECK_THROWS_AS(mssa::read_matrix_binary(dir.file("nan.mat")),
                  mssa::io_error);

  {
    std::ofstream out(dir.file("nan.csv"));
    out << "1,nan\n";
  }
  CHECK_THROWS_AS(mssa::read_matrix_csv(dir.file("nan.csv")), mssa::io_error);
}
