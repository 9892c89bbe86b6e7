#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sing/errors.hpp"
#include "sing/types.hpp"

namespace sing {

enum class MatrixFormat { csv, binary };

/// Matrix file description: rows are subjects in every interchange file.
struct MatrixFile {
  std::string path;
  MatrixFormat format = MatrixFormat::csv;
  bool header = false;
};

namespace detail {

inline constexpr char kBinaryMagic[8] = {'S', 'I', 'N', 'G',
                                         'B', 'I', 'N', '1'};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool parse_double(const std::string& token, double& out) {
  const char* begin = token.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string tok = line.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    const std::size_t b = tok.find_first_not_of(" \t\r");
    const std::size_t e = tok.find_last_not_of(" \t\r");
    tokens.push_back(b == std::string::npos ? std::string()
                                            : tok.substr(b, e - b + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return tokens;
}

}  // namespace detail

/// Write a matrix as comma-separated values at 17 significant digits, which
/// round-trips IEEE doubles exactly. An optional header row labels columns.
inline void write_matrix_csv(const std::string& path, const Matrix& m,
                             const std::vector<std::string>* header = nullptr) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot open for writing: " + path);
  if (header) {
    for (std::size_t j = 0; j < header->size(); ++j) {
      if (j) out << ',';
      out << (*header)[j];
    }
    out << '\n';
  }
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw io_error("write failed: " + path);
}

/// Read a CSV matrix; a first line with any non-numeric token is treated as
/// a header and skipped.
inline Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open for reading: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() ||
        line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    const std::vector<std::string> tokens = detail::split_csv_line(line);
    std::vector<double> row(tokens.size());
    bool ok = true;
    for (std::size_t j = 0; j < tokens.size(); ++j)
      if (!detail::parse_double(tokens[j], row[j])) {
        ok = false;
        break;
      }
    if (!ok) {
      if (first) {
        first = false;
        continue;  // header row
      }
      throw io_error(path + ": non-numeric value in data row " +
                     std::to_string(rows.size() + 1));
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw io_error(path + ": inconsistent column count at data row " +
                     std::to_string(rows.size() + 1));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Index>(rows.size()),
           static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

/// Raw binary format for large matrices: 8-byte magic "SINGBIN1", then two
/// little-endian uint64 dimensions, then row-major little-endian float64.
inline void write_matrix_binary(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);
  out.write(detail::kBinaryMagic, 8);
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()),
                                 static_cast<std::uint64_t>(m.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j)
      row[static_cast<std::size_t>(j)] = m(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw io_error("write failed: " + path);
}

inline Matrix read_matrix_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, detail::kBinaryMagic, 8) != 0)
    throw io_error(path + ": not a sing binary matrix file");
  std::uint64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw io_error(path + ": truncated header");
  Matrix m(static_cast<Index>(dims[0]), static_cast<Index>(dims[1]));
  std::vector<double> row(static_cast<std::size_t>(dims[1]));
  for (Index i = 0; i < m.rows(); ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw io_error(path + ": truncated data");
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

inline void write_matrix(const std::string& path, const Matrix& m,
                         MatrixFormat format = MatrixFormat::csv) {
  if (format == MatrixFormat::binary)
    write_matrix_binary(path, m);
  else
    write_matrix_csv(path, m);
}

/// Read a matrix file, sniffing the binary magic; anything else parses as CSV.
inline Matrix read_matrix(const std::string& path) {
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    char magic[8] = {0};
    in.read(magic, 8);
    if (in.gcount() == 8 &&
        std::memcmp(magic, detail::kBinaryMagic, 8) == 0)
      return read_matrix_binary(path);
  }
  return read_matrix_csv(path);
}

}  // namespace sing
