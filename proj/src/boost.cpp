#include "spatboost/boost.hpp"

#include <cmath>
#include <limits>

namespace spatboost {

BaseLearnerFit fit_baselearner(const Eigen::VectorXd& z,
                               const Eigen::VectorXd& v,
                               const Eigen::VectorXd* weights,
                               const std::string& column_name) {
  if (z.size() != v.size()) {
    throw ValidationError("fit_baselearner: length mismatch");
  }
  const Eigen::VectorXd w =
      weights ? *weights : Eigen::VectorXd::Ones(z.size());
  const double sw = w.sum();
  const double swz = w.dot(z);
  const double swzz = w.dot(z.cwiseProduct(z).eval());
  const double denom = sw * swzz - swz * swz;
  if (denom <= 1e-12 * std::max(1.0, sw * swzz)) {
    throw ValidationError("fit_baselearner: degenerate (constant) column" +
                          (column_name.empty() ? "" : " '" + column_name + "'"));
  }
  const Eigen::VectorXd vw = w.cwiseProduct(v);
  const double swv = vw.sum();
  const double swzv = vw.dot(z);
  BaseLearnerFit fit;
  fit.slope = (sw * swzv - swz * swv) / denom;
  fit.intercept = (swv - fit.slope * swz) / sw;
  fit.rss = vw.dot(v) - fit.intercept * swv - fit.slope * swzv;
  return fit;
}

namespace {

double weighted_risk(const Family& family, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& eta, const Eigen::VectorXd& w) {
  return w.dot(family.pointwise_risk(y, eta));
}

}  // namespace

BoostPath boost_fit(const DesignBlock& design, const Eigen::VectorXd& y,
                    const Family& family, int m_stop, double learning_rate,
                    const Eigen::VectorXd* weights,
                    const IterationObserver& observer) {
  const int n = design.n();
  const int q = design.q();
  if (q == 0) throw ValidationError("boost_fit: empty design");
  if (y.size() != n) throw ValidationError("boost_fit: response length mismatch");
  if (m_stop < 1) throw ValidationError("boost_fit: m_stop must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ValidationError("boost_fit: learning rate must be in (0, 1]");
  }
  Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(n);
  if (w.size() != n || (w.array() < 0.0).any()) {
    throw ValidationError("boost_fit: weights must be nonnegative, length n");
  }
  const double sw = w.sum();
  if (sw <= 0.0) throw ValidationError("boost_fit: all weights are zero");

  const Eigen::MatrixXd& z = design.columns;
  const Eigen::VectorXd swz = z.transpose() * w;
  const Eigen::VectorXd swzz = z.cwiseProduct(z).transpose() * w;
  const Eigen::VectorXd denom =
      (sw * swzz.array() - swz.array().square()).matrix();
  for (int j = 0; j < q; ++j) {
    if (denom[j] <= 1e-12 * std::max(1.0, sw * swzz[j])) {
      throw ValidationError("boost_fit: degenerate column '" +
                            design.names[j] + "'");
    }
  }

  BoostPath path;
  path.m_stop = m_stop;
  path.learning_rate = learning_rate;
  path.steps.reserve(m_stop);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);  // empty-model offset
  path.initial_risk = weighted_risk(family, y, eta, w);

  Eigen::VectorXd slopes(q), intercepts(q), rss(q);
  for (int m = 1; m <= m_stop; ++m) {
    const Eigen::VectorXd v = family.negative_gradient(y, eta);
    if (!v.allFinite()) {
      throw EstimationError("boost_fit: non-finite gradient (invalid spatial structure?)");
    }
    const Eigen::VectorXd vw = w.cwiseProduct(v);
    const double swv = vw.sum();
    const double swvv = vw.dot(v);
    const Eigen::VectorXd swzv = z.transpose() * vw;
    slopes = (sw * swzv.array() - swz.array() * swv) / denom.array();
    intercepts = (swv - slopes.array() * swz.array()) / sw;
    rss = swvv - intercepts.array() * swv - slopes.array() * swzv.array();

    int best = 0;
    for (int j = 1; j < q; ++j) {
      if (rss[j] < rss[best]) best = j;  // ties keep the lower index
    }

    eta.array() +=
        learning_rate * (intercepts[best] + slopes[best] * z.col(best).array());
    IterationRecord rec;
    rec.selected = best;
    rec.intercept_inc = intercepts[best];
    rec.slope_inc = slopes[best];
    rec.risk = weighted_risk(family, y, eta, w);
    path.steps.push_back(rec);
    if (observer) observer(m, eta);
  }

  path.coefficients = Eigen::VectorXd::Zero(q);
  for (const auto& rec : path.steps) {
    path.intercept += learning_rate * rec.intercept_inc;
    path.coefficients[rec.selected] += learning_rate * rec.slope_inc;
  }
  path.eta = std::move(eta);
  return path;
}

std::pair<double, Eigen::VectorXd> coefficients_at(const BoostPath& path,
                                                   int m) {
  if (m < 0 || m > path.m_stop) {
    throw ValidationError("coefficients_at: iteration out of range");
  }
  double intercept = 0.0;
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(path.coefficients.size());
  for (int i = 0; i < m; ++i) {
    const auto& rec = path.steps[i];
    intercept += path.learning_rate * rec.intercept_inc;
    coef[rec.selected] += path.learning_rate * rec.slope_inc;
  }
  return {intercept, coef};
}

Eigen::VectorXd risk_attribution(const BoostPath& path) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(path.coefficients.size());
  double prev = path.initial_risk;
  for (const auto& rec : path.steps) {
    r[rec.selected] += prev - rec.risk;
    prev = rec.risk;
  }
  return r;
}

DeselectionReport deselect(const BoostPath& path, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw ValidationError("deselect: tau must be in (0, 1)");
  }
  DeselectionReport report;
  report.tau = tau;
  report.attribution = risk_attribution(path);
  report.total_reduction = path.initial_risk - path.final_risk();
  if (report.total_reduction <= 0.0) {
    report.all_deselected = true;
    return report;
  }
  const double threshold = tau * report.total_reduction;
  for (int j = 0; j < report.attribution.size(); ++j) {
    if (report.attribution[j] >= threshold) report.retained.push_back(j);
  }
  report.all_deselected = report.retained.empty();
  return report;
}

}  // namespace spatboost
