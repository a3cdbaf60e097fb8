#include "gpgeo/io.hpp"

#include <bit>
#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace gpgeo {

namespace {

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

bool parse_number(const std::string& field, double& value) {
  const std::string text = trim(field);
  if (text.empty()) return false;
  errno = 0;
  char* end = nullptr;
  value = std::strtod(text.c_str(), &end);
  return end == text.c_str() + text.size() && errno != ERANGE;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream stream(line);
  std::string field;
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

Matrix<double> read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_number = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = split(text);
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (const auto& field : fields) {
      double value = 0;
      if (!parse_number(field, value)) {
        numeric = false;
        break;
      }
      row.push_back(value);
    }
    if (!numeric) {
      if (first_content) {
        first_content = false;
        continue;
      }
      throw ParseError(path + ":" + std::to_string(line_number) + ": not a number");
    }
    first_content = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path + ":" + std::to_string(line_number) + ": expected " +
                       std::to_string(rows.front().size()) + " fields, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("'" + path + "' contains no data rows");
  Matrix<double> out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return out;
}

Design<double> read_locations(const std::string& path) {
  const Matrix<double> values = read_csv_matrix(path);
  return Design<double>(Design<double>::CoordMatrix(values));
}

Vector<double> read_observations(const std::string& path) {
  const Matrix<double> values = read_csv_matrix(path);
  if (values.cols() != 1) {
    throw ParseError("'" + path + "' must have a single column, got " + std::to_string(values.cols()));
  }
  return values.col(0);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  std::filesystem::path temp = target;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + temp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + temp.string() + "'");
  }
  std::filesystem::rename(temp, target);
}

void write_binary_matrix(const std::string& path, const Matrix<double>& values) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(values.size()) * 8);
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(values(i, j));
      for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
  }
  write_file_atomic(path, bytes);
}

}  // namespace gpgeo
