#include "spatboost/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spatboost {

namespace {

void check_entries(const SparseMat& w) {
  for (int i = 0; i < w.outerSize(); ++i) {
    for (SparseMat::InnerIterator it(w, i); it; ++it) {
      if (!std::isfinite(it.value()) || it.value() < 0.0) {
        throw ValidationError("weight matrix entry (" +
                              std::to_string(it.row()) + "," +
                              std::to_string(it.col()) +
                              ") is negative or non-finite");
      }
      if (it.row() == it.col() && it.value() != 0.0) {
        throw ValidationError("weight matrix has a self-loop at index " +
                              std::to_string(it.row()));
      }
    }
  }
}

}  // namespace

WeightMatrix::WeightMatrix(SparseMat w, bool row_normalized)
    : w_(std::move(w)), row_normalized_(row_normalized) {
  if (w_.rows() != w_.cols()) {
    throw ValidationError("weight matrix must be square");
  }
  w_.prune(0.0);
  w_.makeCompressed();
  check_entries(w_);
}

WeightMatrix WeightMatrix::from_triplets(
    int n, const std::vector<Eigen::Triplet<double>>& entries,
    bool row_normalized) {
  SparseMat w(n, n);
  w.setFromTriplets(entries.begin(), entries.end());
  return WeightMatrix(std::move(w), row_normalized);
}

Eigen::MatrixXd WeightMatrix::lag(const Eigen::MatrixXd& m) const {
  if (m.rows() != w_.rows()) {
    throw ValidationError("spatial lag: matrix has " + std::to_string(m.rows()) +
                          " rows, expected " + std::to_string(w_.rows()));
  }
  return w_ * m;
}

Eigen::VectorXd WeightMatrix::lag(const Eigen::VectorXd& v) const {
  if (v.size() != w_.rows()) {
    throw ValidationError("spatial lag: vector length mismatch");
  }
  return w_ * v;
}

WeightMatrix build_circular(int n, int k) {
  if (k < 1) throw ValidationError("circular weights need K >= 1");
  if (n <= 2 * k) {
    throw ValidationError("circular weights need n > 2K (got n=" +
                          std::to_string(n) + ", K=" + std::to_string(k) + ")");
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n) * 2 * k);
  for (int i = 0; i < n; ++i) {
    for (int d = 1; d <= k; ++d) {
      entries.emplace_back(i, (i + d) % n, 1.0);
      entries.emplace_back(i, (i - d + n) % n, 1.0);
    }
  }
  return WeightMatrix::from_triplets(n, entries);
}

WeightMatrix build_knn(const Coordinates& coords, int k) {
  const int n = static_cast<int>(coords.size());
  if (coords.y.size() != n) throw ValidationError("coordinate arrays differ in length");
  if (n < 2) throw ValidationError("kNN weights need at least 2 points");
  if (k < 1 || k >= n) {
    throw ValidationError("kNN weights need 1 <= K < n");
  }
  if (!coords.x.allFinite() || !coords.y.allFinite()) {
    throw ValidationError("kNN weights: non-finite coordinate");
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n) * k);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> d2(n);
    for (int j = 0; j < n; ++j) {
      const double dx = coords.x[i] - coords.x[j];
      const double dy = coords.y[i] - coords.y[j];
      d2[j] = dx * dx + dy * dy;
    }
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (d2[a] != d2[b]) return d2[a] < d2[b];
      return a < b;  // tie-break on the lower index
    });
    int taken = 0;
    for (int j : order) {
      if (j == i) continue;
      entries.emplace_back(i, j, 1.0);
      if (++taken == k) break;
    }
  }
  return WeightMatrix::from_triplets(n, entries);
}

WeightMatrix row_normalize(const WeightMatrix& w) {
  SparseMat m = w.matrix();
  for (int i = 0; i < m.outerSize(); ++i) {
    double sum = 0.0;
    for (SparseMat::InnerIterator it(m, i); it; ++it) sum += it.value();
    if (sum <= 0.0) {
      throw ValidationError("row_normalize: location " + std::to_string(i) +
                            " has no neighbors");
    }
    for (SparseMat::InnerIterator it(m, i); it; ++it) it.valueRef() /= sum;
  }
  return WeightMatrix(std::move(m), true);
}

std::vector<std::string> validate(const SparseMat& m, bool row_normalized) {
  std::vector<std::string> violations;
  const int n = static_cast<int>(m.rows());
  Eigen::VectorXd row_abs = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd col_abs = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m.outerSize(); ++i) {
    for (SparseMat::InnerIterator it(m, i); it; ++it) {
      if (it.row() == it.col() && it.value() != 0.0) {
        violations.push_back("self-loop at index " + std::to_string(it.row()));
      }
      row_abs[it.row()] += std::abs(it.value());
      col_abs[it.col()] += std::abs(it.value());
    }
  }
  if (row_normalized) {
    for (int i = 0; i < n; ++i) {
      if (std::abs(row_abs[i] - 1.0) > 1e-12) {
        violations.push_back("row " + std::to_string(i) + " sums to " +
                             std::to_string(row_abs[i]) +
                             " but matrix is flagged row-normalized");
      }
    }
  }
  // Degree statistics are informational only; the boundedness conditions are
  // asymptotic and cannot be checked on a single matrix.
  return violations;
}

std::vector<std::string> validate(const WeightMatrix& w) {
  return validate(w.matrix(), w.row_normalized());
}

}  // namespace spatboost
