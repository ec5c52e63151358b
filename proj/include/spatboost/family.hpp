#pragma once

#include <Eigen/Dense>
#include <optional>

#include "spatboost/weights.hpp"

namespace spatboost {

// (lambda, sigma2) together with the sparse precision factor P = I - lambda*W.
// The inverse error covariance is applied as (1/sigma2) P'P throughout; the
// covariance itself is never formed.
struct SpatialErrorStructure {
  double lambda = 0.0;
  double sigma2 = 1.0;
  SparseMat precision;  // I - lambda * W
  SparseMat weights;    // the W it was built from

  int size() const { return static_cast<int>(precision.rows()); }
};

SpatialErrorStructure make_spatial_structure(const WeightMatrix& w,
                                             double lambda, double sigma2);

// log|det(I - lambda*W)| via sparse LU.
double log_det_precision(const SpatialErrorStructure& s);

// Boosting loss family: spatial-error (squared Mahalanobis distance under
// the spatially induced covariance) or plain squared error.
class Family {
 public:
  static Family squared_error() { return Family(); }
  static Family spatial_error(SpatialErrorStructure s);

  bool is_spatial() const { return structure_.has_value(); }
  const SpatialErrorStructure& structure() const { return *structure_; }

  double loss(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) const;
  Eigen::VectorXd negative_gradient(const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& eta) const;
  // Nonnegative per-observation contributions summing to loss(). For the
  // spatial family the i-th entry is e_i^2/sigma2 with e = P(y - eta).
  Eigen::VectorXd pointwise_risk(const Eigen::VectorXd& y,
                                 const Eigen::VectorXd& eta) const;

 private:
  Family() = default;
  std::optional<SpatialErrorStructure> structure_;
};

}  // namespace spatboost
