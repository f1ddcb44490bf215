#include "enda/io.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "enda/snapshot.hpp"

namespace enda {

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end)
    throw IoError("cannot parse '" + text + "' as a number");
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else if (ch != '\r') {
      current.push_back(ch);
    }
  }
  fields.push_back(current);
  return fields;
}

void write_ensemble_csv(const std::string& path, const Ensemble& e) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  for (Eigen::Index j = 0; j < e.dim(); ++j) os << (j ? ",p" : "p") << j;
  os << '\n';
  for (Eigen::Index m = 0; m < e.member_count(); ++m) {
    for (Eigen::Index j = 0; j < e.dim(); ++j) {
      if (j) os << ',';
      os << format_double(e.members(m, j));
    }
    os << '\n';
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

Ensemble read_ensemble_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty ensemble file '" + path + "'");
  const std::size_t dim = split_csv_line(line).size();

  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != dim)
      throw IoError("ragged ensemble row in '" + path + "'");
    for (const auto& f : fields) values.push_back(parse_double(f));
    ++rows;
  }
  Ensemble e;
  e.members.resize(rows, static_cast<Eigen::Index>(dim));
  for (Eigen::Index m = 0; m < rows; ++m)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(dim); ++j)
      e.members(m, j) = values[static_cast<std::size_t>(m) * dim + j];
  return e;
}

void write_field_csv(const std::string& path, const Eigen::VectorXd& field, int n) {
  if (field.size() != static_cast<Eigen::Index>(n) * n)
    throw PreconditionError("field csv: size does not match grid");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      if (ix) os << ',';
      os << format_double(field(static_cast<Eigen::Index>(iy) * n + ix));
    }
    os << '\n';
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

Eigen::VectorXd read_field_csv(const std::string& path, int expected_n) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::vector<double> values;
  std::string line;
  int rows = 0;
  std::size_t cols = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (cols == 0) cols = fields.size();
    if (fields.size() != cols) throw IoError("ragged field row in '" + path + "'");
    for (const auto& f : fields) values.push_back(parse_double(f));
    ++rows;
  }
  if (rows != static_cast<int>(cols))
    throw IoError("field in '" + path + "' is not square");
  if (expected_n > 0 && rows != expected_n)
    throw IoError("field in '" + path + "' does not match the expected grid");
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_ensemble_snapshot(const std::string& path, const Ensemble& e) {
  Snapshot snap;
  snap.set("members", e.members);
  snap.save(path);
}

Ensemble read_ensemble_snapshot(const std::string& path) {
  const Snapshot snap = Snapshot::load(path);
  return Ensemble{snap.get("members")};
}

}  // namespace enda
