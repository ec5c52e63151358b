#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "spatboost/weights.hpp"

namespace spatboost {

struct DataTable {
  std::vector<std::string> names;
  Eigen::MatrixXd values;  // n rows, one column per name

  int column_index(const std::string& name) const;  // -1 when absent
};

// Data CSV: header row of names, numeric body, '.' decimal, no missing
// values (hard error on anything non-numeric).
DataTable read_data_csv(const std::string& path);
void write_data_csv(const std::string& path, const DataTable& table);

// Weight-matrix triplets: header `i,j,w`, 0-based indices.
WeightMatrix read_weight_csv(const std::string& path, bool row_normalized);
void write_weight_csv(const std::string& path, const WeightMatrix& w);

// Coordinates: header `id,x,y`.
Coordinates read_coords_csv(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// FNV-1a over the file bytes; used for manifest input digests.
std::string file_digest(const std::string& path);

}  // namespace spatboost
