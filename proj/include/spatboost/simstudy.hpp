#pragma once

#include <Eigen/Dense>
#include <set>
#include <string>
#include <vector>

#include "spatboost/pipeline.hpp"

namespace spatboost {

struct ScenarioConfig {
  int n = 400;
  int q = 20;  // even: half raw covariates, half spatial lags
  double lambda = 0.4;
  double sigma2 = 1.0;
  int k = 5;
  int n_sim = 100;
  int n_test = 400;
  std::vector<Variant> variants = {Variant::kLsGb, Variant::kGbGb,
                                   Variant::kDsGb, Variant::kDsDs,
                                   Variant::kFgls};
  std::uint64_t seed = 1;

  // Fitting knobs shared by all variants.
  double learning_rate = 0.1;
  int m_max = 1000;
  int folds = 25;
  double subsample_fraction = 0.5;
  double tau = 0.01;

  void check() const;
  FitConfig fit_config() const;
};

struct Dataset {
  Eigen::VectorXd y;
  DesignBlock design;
  WeightMatrix weights;
};

// Draws one replication: q/2 iid U(-2,2) covariates, circular row-normalized
// W(n, K), Z = [X, WX], u = (I - lambda W)^{-1} eps with Gaussian eps, and
// y = 1 + 3.5 X1 - 2.5 X2 - 4 (WX)1 + 3 (WX)2 + u.
Dataset generate_dgp(const ScenarioConfig& cfg, std::uint64_t rep_seed);

struct SelectionRates {
  double tpr = 0.0;  // percentages
  double tnr = 0.0;
  double fdr = 0.0;
};

SelectionRates selection_metrics(const std::set<std::string>& selected,
                                 const std::set<std::string>& truth, int q);

struct EstimationSummary {
  double bias = 0.0;
  double mse = 0.0;
  double ese = 0.0;
};

EstimationSummary estimation_metrics(const std::vector<double>& lambda_hats,
                                     double lambda_true);

struct PredictionSummary {
  double rmsep = 0.0;
  double maep = 0.0;
  double nll = 0.0;
};

PredictionSummary prediction_metrics(const Eigen::VectorXd& y_test,
                                     const Eigen::VectorXd& eta_hat,
                                     const SpatialErrorStructure& structure);

struct VariantMetrics {
  std::string variant;
  int attempted = 0;
  int succeeded = 0;
  SelectionRates selection;   // means over succeeded replications
  EstimationSummary estimation;
  PredictionSummary prediction;  // means over succeeded replications
  double mean_m_opt = 0.0;
  std::string note;  // skip/failure reason, if any
};

struct MetricsTable {
  ScenarioConfig scenario;
  std::vector<VariantMetrics> rows;
};

using StudyLogger = std::function<void(const std::string&)>;

MetricsTable run_study(const ScenarioConfig& cfg,
                       const StudyLogger& log = nullptr);

// Machine-readable outputs: one CSV row per variant and a JSON summary.
std::string metrics_csv_header();
std::string metrics_to_csv(const MetricsTable& table, bool with_header = true);
std::string metrics_to_json(const MetricsTable& table);

}  // namespace spatboost
