#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <string>
#include <vector>

#include "spatboost/common.hpp"

namespace spatboost {

using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Coordinates {
  Eigen::VectorXd x;
  Eigen::VectorXd y;

  Eigen::Index size() const { return x.size(); }
};

// Sparse n x n spatial weight matrix. Immutable after construction; zero
// diagonal and nonnegative finite weights are enforced on entry.
class WeightMatrix {
 public:
  WeightMatrix(SparseMat w, bool row_normalized);

  static WeightMatrix from_triplets(
      int n, const std::vector<Eigen::Triplet<double>>& entries,
      bool row_normalized = false);

  int size() const { return static_cast<int>(w_.rows()); }
  Eigen::Index nonzeros() const { return w_.nonZeros(); }
  bool row_normalized() const { return row_normalized_; }
  const SparseMat& matrix() const { return w_; }

  // W * M for a dense matrix/vector with n rows.
  Eigen::MatrixXd lag(const Eigen::MatrixXd& m) const;
  Eigen::VectorXd lag(const Eigen::VectorXd& v) const;

 private:
  SparseMat w_;
  bool row_normalized_;
};

// Circular world: each location neighbors its K predecessors and K
// successors modulo n, raw weight 1. Not yet row-normalized.
WeightMatrix build_circular(int n, int k);

// Directed k-nearest-neighbor weights by Euclidean distance, weight 1 per
// neighbor. Distance ties break toward the lower location index.
WeightMatrix build_knn(const Coordinates& coords, int k);

// Divides every row by its sum. Rows without neighbors are a hard error.
WeightMatrix row_normalize(const WeightMatrix& w);

// Reports self-loops, row-sum deviations (when flagged normalized) and
// degree statistics. Empty result means no violations. The raw overload
// audits matrices that have not passed WeightMatrix construction checks.
std::vector<std::string> validate(const SparseMat& m, bool row_normalized);
std::vector<std::string> validate(const WeightMatrix& w);

}  // namespace spatboost
