#include "spatboost/io.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace spatboost {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& s, const std::string& path, int line) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError(path + ": non-numeric value '" + s + "' at line " +
                          std::to_string(line));
  }
  return value;
}

std::string fmt(double v) {
  char buf[64];
  // Shortest representation that parses back to the same double.
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

int DataTable::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] == name) return static_cast<int>(j);
  }
  return -1;
}

DataTable read_data_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.size() < 2) throw ValidationError(path + ": no data rows");
  DataTable table;
  table.names = split_csv_line(lines[0]);
  const int q = static_cast<int>(table.names.size());
  const int n = static_cast<int>(lines.size()) - 1;
  table.values.resize(n, q);
  for (int i = 0; i < n; ++i) {
    const auto fields = split_csv_line(lines[i + 1]);
    if (static_cast<int>(fields.size()) != q) {
      throw ValidationError(path + ": row " + std::to_string(i + 2) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(q));
    }
    for (int j = 0; j < q; ++j) {
      table.values(i, j) = parse_number(fields[j], path, i + 2);
    }
  }
  return table;
}

void write_data_csv(const std::string& path, const DataTable& table) {
  std::ostringstream out;
  for (std::size_t j = 0; j < table.names.size(); ++j) {
    if (j) out << ',';
    out << table.names[j];
  }
  out << '\n';
  for (int i = 0; i < table.values.rows(); ++i) {
    for (int j = 0; j < table.values.cols(); ++j) {
      if (j) out << ',';
      out << fmt(table.values(i, j));
    }
    out << '\n';
  }
  write_file(path, out.str());
}

WeightMatrix read_weight_csv(const std::string& path, bool row_normalized) {
  const auto lines = read_lines(path);
  if (lines.empty() || split_csv_line(lines[0]) != std::vector<std::string>{"i", "j", "w"}) {
    throw ValidationError(path + ": expected header 'i,j,w'");
  }
  std::vector<Eigen::Triplet<double>> entries;
  int n = 0;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto fields = split_csv_line(lines[l]);
    if (fields.size() != 3) {
      throw ValidationError(path + ": malformed triplet at line " +
                            std::to_string(l + 1));
    }
    const int i = static_cast<int>(parse_number(fields[0], path, l + 1));
    const int j = static_cast<int>(parse_number(fields[1], path, l + 1));
    const double w = parse_number(fields[2], path, l + 1);
    if (i < 0 || j < 0) throw ValidationError(path + ": negative index");
    entries.emplace_back(i, j, w);
    n = std::max(n, std::max(i, j) + 1);
  }
  return WeightMatrix::from_triplets(n, entries, row_normalized);
}

void write_weight_csv(const std::string& path, const WeightMatrix& w) {
  std::ostringstream out;
  out << "i,j,w\n";
  const SparseMat& m = w.matrix();
  for (int i = 0; i < m.outerSize(); ++i) {
    for (SparseMat::InnerIterator it(m, i); it; ++it) {
      out << it.row() << ',' << it.col() << ',' << fmt(it.value()) << '\n';
    }
  }
  write_file(path, out.str());
}

Coordinates read_coords_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || split_csv_line(lines[0]) != std::vector<std::string>{"id", "x", "y"}) {
    throw ValidationError(path + ": expected header 'id,x,y'");
  }
  const int n = static_cast<int>(lines.size()) - 1;
  Coordinates coords;
  coords.x.resize(n);
  coords.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto fields = split_csv_line(lines[i + 1]);
    if (fields.size() != 3) {
      throw ValidationError(path + ": malformed row at line " + std::to_string(i + 2));
    }
    coords.x[i] = parse_number(fields[1], path, i + 2);
    coords.y[i] = parse_number(fields[2], path, i + 2);
  }
  return coords;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << content;
}

std::string file_digest(const std::string& path) {
  const std::string bytes = read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a:") + buf;
}

}  // namespace spatboost
