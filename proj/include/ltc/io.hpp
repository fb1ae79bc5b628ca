#pragma once

#include "ltc/common.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ltc::io {

/// Round-trip decimal form used in every CSV cell ("%.17g").
std::string format_double(double v);

struct Table {
  std::vector<std::string> columns;
  /// One line for the schema file.
  std::string description;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<double>& values);
  void add_row(std::vector<std::string> cells);
  std::string to_csv() const;
};

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string fnv1a64_hex(const std::string& bytes);

/// Dense binary dump: "LTCM", u32 version, u64 rows, u64 cols, then
/// column-major (re, im) little-endian doubles.
std::string dense_binary(const Mat& m);
Mat read_dense_binary(const std::string& bytes);

/// One "row,col,re,im" line per nonzero entry, after a header line.
std::string triplet_text(const Mat& m);
Mat read_triplet_text(const std::string& text, Eigen::Index rows, Eigen::Index cols);

/// Writes bytes to path, creating parent directories; throws Error naming the
/// path on failure.
void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace ltc::io
