#include "ltc/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ltc::io {

namespace {

static_assert(std::endian::native == std::endian::little, "binary dumps assume little-endian");

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw InvalidArgument("dense binary: truncated data");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

constexpr std::uint32_t kBinaryVersion = 1;

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void Table::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  add_row(std::move(cells));
}

void Table::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns.size()) throw InvalidArgument("table: row width != header width");
  rows.push_back(std::move(cells));
}

std::string Table::to_csv() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
  return out;
}

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string dense_binary(const Mat& m) {
  std::string out = "LTCM";
  put<std::uint32_t>(out, kBinaryVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      put<double>(out, m(i, j).real());
      put<double>(out, m(i, j).imag());
    }
  }
  return out;
}

Mat read_dense_binary(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "LTCM") != 0) {
    throw InvalidArgument("dense binary: bad magic");
  }
  std::size_t pos = 4;
  if (get<std::uint32_t>(bytes, pos) != kBinaryVersion) {
    throw InvalidArgument("dense binary: unsupported version");
  }
  const auto rows = static_cast<Eigen::Index>(get<std::uint64_t>(bytes, pos));
  const auto cols = static_cast<Eigen::Index>(get<std::uint64_t>(bytes, pos));
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = get<double>(bytes, pos);
      const double im = get<double>(bytes, pos);
      m(i, j) = {re, im};
    }
  }
  return m;
}

std::string triplet_text(const Mat& m) {
  std::string out = "row,col,re,im\n";
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) == cplx(0.0, 0.0)) continue;
      out += std::to_string(i) + ',' + std::to_string(j) + ',' + format_double(m(i, j).real()) +
             ',' + format_double(m(i, j).imag()) + '\n';
    }
  }
  return out;
}

Mat read_triplet_text(const std::string& text, Eigen::Index rows, Eigen::Index cols) {
  Mat m = Mat::Zero(rows, cols);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    long i = 0;
    long j = 0;
    double re = 0.0;
    double im = 0.0;
    if (std::sscanf(line.c_str(), "%ld,%ld,%lf,%lf", &i, &j, &re, &im) != 4 || i < 0 || j < 0 ||
        i >= rows || j >= cols) {
      throw InvalidArgument("triplet: malformed line '" + line + "'");
    }
    m(i, j) = {re, im};
  }
  return m;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace ltc::io
