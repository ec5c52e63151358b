#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "spatboost/boost.hpp"
#include "spatboost/moments.hpp"

namespace spatboost {

enum class FirstStep { kOls, kBoost, kBoostDeselect };

enum class Variant { kLsGb, kGbGb, kDsGb, kDsDs, kFgls };

std::string variant_label(Variant v);
Variant parse_variant(const std::string& label);

struct FitConfig {
  FirstStep first_step = FirstStep::kBoost;
  bool final_deselect = false;
  double learning_rate = 0.1;
  int m_max = 1000;
  int folds = 25;
  double subsample_fraction = 0.5;
  double tau = 0.01;
  std::uint64_t seed = 0;

  void check() const;
  static FitConfig for_variant(Variant v, const FitConfig& base);
};

struct TuneResult {
  int m_opt = 1;
  std::vector<double> oob_risk;  // fold-averaged, index m-1
};

// Subsampling-based stopping-iteration search: `folds` random half samples
// fit with 0/1 weights, out-of-bag risk evaluated at every iteration on the
// held-out indices via pointwise_risk, minimum of the averaged curve wins.
TuneResult tune_mstop(const DesignBlock& design, const Eigen::VectorXd& y,
                      const Family& family, const FitConfig& cfg,
                      std::uint64_t fold_seed);

struct FirstStepResult {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
  int m_opt = 0;  // 0 for OLS
};

// Step 1 of the feasible procedure: fit y on Z ignoring the autoregressive
// disturbance structure (OLS, boosting, or boosting with deselection).
FirstStepResult first_step(const DesignBlock& design, const Eigen::VectorXd& y,
                           const FitConfig& cfg);

struct FitResult {
  double lambda_hat = 0.0;
  double sigma2_hat = 0.0;
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  std::vector<std::string> names;
  std::vector<std::string> selected;  // names of nonzero coefficients
  int m_opt = 0;                      // step-3 stopping iteration
  int m_opt_first = 0;                // step-1 stopping iteration (boost variants)
  std::string variant;
  std::vector<double> risk_path;
};

// The three-step feasible procedure: first step on Z, generalized-moments
// estimation of (lambda, sigma2) from the residuals, then boosting under the
// estimated spatial-error family (with optional post-hoc deselection).
FitResult fit_sdem(const DesignBlock& design, const Eigen::VectorXd& y,
                   const WeightMatrix& w, const FitConfig& cfg);

// FGLS comparator sharing the OLS first step and moment estimation.
FitResult fit_fgls_pipeline(const DesignBlock& design, const Eigen::VectorXd& y,
                            const WeightMatrix& w, const FitConfig& cfg);

FitResult fit_variant(Variant v, const DesignBlock& design,
                      const Eigen::VectorXd& y, const WeightMatrix& w,
                      const FitConfig& cfg);

// Trend prediction: intercept + Z_new * coefficients, matched by name.
Eigen::VectorXd predict(const FitResult& fit, const DesignBlock& z_new);

}  // namespace spatboost
