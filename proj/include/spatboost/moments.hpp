#pragma once

#include <Eigen/Dense>
#include <utility>

#include "spatboost/boost.hpp"
#include "spatboost/family.hpp"
#include "spatboost/weights.hpp"

namespace spatboost {

// Three-equation moment system in (lambda, lambda^2, sigma2) built from
// first-step residuals and their spatial lags.
struct MomentSystem {
  Eigen::Matrix3d G;
  Eigen::Vector3d g;
  int n = 0;
};

struct MomentEstimate {
  double lambda_hat = 0.0;
  double sigma2_hat = 0.0;
  double objective = 0.0;
  bool boundary = false;       // lambda_hat pinned at the search box edge
  bool sigma2_clamped = false; // profile hit the sigma2 floor
};

MomentSystem build_moment_system(const Eigen::VectorXd& u_tilde,
                                 const WeightMatrix& w);

// Identity-weighted nonlinear least squares on the moment system, profiling
// sigma2 (linear given lambda) and minimizing over lambda by a 0.01 grid
// followed by golden-section refinement.
MomentEstimate nls_estimate(const MomentSystem& sys);

// Generalized least squares with weight P'P and a prepended intercept
// column. Comparator for the boosting fits.
std::pair<double, Eigen::VectorXd> fit_fgls(const DesignBlock& design,
                                            const Eigen::VectorXd& y,
                                            const SpatialErrorStructure& s);

inline constexpr double kLambdaBound = 0.999;
inline constexpr double kSigma2Floor = 1e-10;

}  // namespace spatboost
