#include "spatboost/moments.hpp"

#include <cmath>
#include <limits>

namespace spatboost {

MomentSystem build_moment_system(const Eigen::VectorXd& u_tilde,
                                 const WeightMatrix& w) {
  const int n = w.size();
  if (u_tilde.size() != n) {
    throw ValidationError("build_moment_system: residual length mismatch");
  }
  if (!u_tilde.allFinite()) {
    throw ValidationError("build_moment_system: non-finite residuals");
  }
  const Eigen::VectorXd u = u_tilde;
  const Eigen::VectorXd ub = w.lag(u);    // Wu
  const Eigen::VectorXd ubb = w.lag(ub);  // WWu
  const double nn = static_cast<double>(n);

  double tr_wtw = 0.0;  // tr(W'W) = sum of squared entries
  const SparseMat& m = w.matrix();
  for (int i = 0; i < m.outerSize(); ++i) {
    for (SparseMat::InnerIterator it(m, i); it; ++it) {
      tr_wtw += it.value() * it.value();
    }
  }

  MomentSystem sys;
  sys.n = n;
  sys.G << 2.0 / nn * u.dot(ub), -1.0 / nn * ub.dot(ub), 1.0,
      2.0 / nn * ubb.dot(ub), -1.0 / nn * ubb.dot(ubb), tr_wtw / nn,
      1.0 / nn * (u.dot(ubb) + ub.dot(ub)), -1.0 / nn * ub.dot(ubb), 0.0;
  sys.g << u.dot(u) / nn, ub.dot(ub) / nn, u.dot(ub) / nn;
  return sys;
}

namespace {

// Profiles sigma2 out: given lambda, the objective is quadratic in sigma2
// through G's third column, so the minimizer is closed-form (clamped at the
// floor). Returns the profiled objective value.
double profiled_objective(const MomentSystem& sys, double lambda,
                          double* sigma2_out, bool* clamped_out) {
  const Eigen::Vector3d a =
      lambda * sys.G.col(0) + lambda * lambda * sys.G.col(1) - sys.g;
  const Eigen::Vector3d c = sys.G.col(2);
  double s2 = -a.dot(c) / c.dot(c);
  bool clamped = false;
  if (s2 < kSigma2Floor) {
    s2 = kSigma2Floor;
    clamped = true;
  }
  if (sigma2_out) *sigma2_out = s2;
  if (clamped_out) *clamped_out = clamped;
  return (a + s2 * c).squaredNorm();
}

}  // namespace

MomentEstimate nls_estimate(const MomentSystem& sys) {
  if (sys.G.col(0).norm() < 1e-300 && sys.G.col(1).norm() < 1e-300) {
    throw EstimationError(
        "nls_estimate: moment system is degenerate (zero residuals?)");
  }

  // Dense grid over the lambda search box.
  double best_lambda = -kLambdaBound;
  double best_obj = std::numeric_limits<double>::infinity();
  for (double l = -kLambdaBound; l <= kLambdaBound + 1e-12; l += 0.01) {
    const double lam = std::min(l, kLambdaBound);
    const double obj = profiled_objective(sys, lam, nullptr, nullptr);
    if (obj < best_obj) {
      best_obj = obj;
      best_lambda = lam;
    }
  }

  // Golden-section refinement around the grid minimizer.
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::max(-kLambdaBound, best_lambda - 0.01);
  double hi = std::min(kLambdaBound, best_lambda + 0.01);
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = profiled_objective(sys, x1, nullptr, nullptr);
  double f2 = profiled_objective(sys, x2, nullptr, nullptr);
  while (hi - lo > 1e-8) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = profiled_objective(sys, x1, nullptr, nullptr);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = profiled_objective(sys, x2, nullptr, nullptr);
    }
  }
  const double lambda_hat = 0.5 * (lo + hi);

  MomentEstimate est;
  est.lambda_hat = lambda_hat;
  est.objective =
      profiled_objective(sys, lambda_hat, &est.sigma2_hat, &est.sigma2_clamped);
  est.boundary = std::abs(std::abs(lambda_hat) - kLambdaBound) < 1e-6;
  return est;
}

std::pair<double, Eigen::VectorXd> fit_fgls(const DesignBlock& design,
                                            const Eigen::VectorXd& y,
                                            const SpatialErrorStructure& s) {
  const int n = design.n();
  const int q = design.q();
  if (y.size() != n || s.size() != n) {
    throw ValidationError("fit_fgls: dimension mismatch");
  }
  if (q + 1 > n) {
    throw EstimationError("fit_fgls: rank deficiency (q + 1 > n)");
  }
  Eigen::MatrixXd zt(n, q + 1);
  zt.col(0).setOnes();
  zt.rightCols(q) = design.columns;
  const Eigen::MatrixXd a = s.precision * zt;  // P * [1, Z]
  const Eigen::VectorXd b = s.precision * y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < q + 1) {
    throw EstimationError("fit_fgls: rank-deficient whitened design");
  }
  const Eigen::VectorXd coef = qr.solve(b);
  return {coef[0], coef.tail(q)};
}

}  // namespace spatboost
