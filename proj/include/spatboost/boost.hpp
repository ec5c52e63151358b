#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "spatboost/family.hpp"

namespace spatboost {

// Stacked design Z = [X, WX] with column names. truth_mask marks the
// informative columns in simulations; empty otherwise.
struct DesignBlock {
  Eigen::MatrixXd columns;
  std::vector<std::string> names;
  std::vector<char> truth_mask;

  int n() const { return static_cast<int>(columns.rows()); }
  int q() const { return static_cast<int>(columns.cols()); }
};

struct BaseLearnerFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rss = 0.0;
};

// Weighted simple linear regression of v on (1, z).
BaseLearnerFit fit_baselearner(const Eigen::VectorXd& z,
                               const Eigen::VectorXd& v,
                               const Eigen::VectorXd* weights = nullptr,
                               const std::string& column_name = "");

struct IterationRecord {
  int selected = -1;
  double intercept_inc = 0.0;  // unscaled fitted increments; the learning
  double slope_inc = 0.0;      // rate is applied on accumulation
  double risk = 0.0;
};

struct BoostPath {
  int m_stop = 0;
  double learning_rate = 0.1;
  double initial_risk = 0.0;
  std::vector<IterationRecord> steps;
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd eta;  // final linear predictor

  double final_risk() const {
    return steps.empty() ? initial_risk : steps.back().risk;
  }
};

struct DeselectionReport {
  Eigen::VectorXd attribution;  // R_j per column
  double tau = 0.0;
  std::vector<int> retained;
  double total_reduction = 0.0;
  bool all_deselected = false;
};

// Called after every update with the iteration index (1-based) and the
// current linear predictor; used for out-of-bag risk curves.
using IterationObserver =
    std::function<void(int m, const Eigen::VectorXd& eta)>;

// Component-wise gradient boosting over simple linear base-learners.
// Observation weights (all-ones when absent) enter the base-learner fits and
// the recorded risk; the gradient itself is always full-sample.
BoostPath boost_fit(const DesignBlock& design, const Eigen::VectorXd& y,
                    const Family& family, int m_stop, double learning_rate,
                    const Eigen::VectorXd* weights = nullptr,
                    const IterationObserver& observer = nullptr);

// Partial coefficient sums through iteration m (m = 0 is the empty model).
std::pair<double, Eigen::VectorXd> coefficients_at(const BoostPath& path,
                                                   int m);

// R_j: total risk reduction attributed to column j over the path.
Eigen::VectorXd risk_attribution(const BoostPath& path);

// Retains columns whose attribution reaches tau times the total reduction.
DeselectionReport deselect(const BoostPath& path, double tau);

}  // namespace spatboost
