#include "spatboost/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace spatboost {

std::string variant_label(Variant v) {
  switch (v) {
    case Variant::kLsGb: return "ls-gb";
    case Variant::kGbGb: return "gb-gb";
    case Variant::kDsGb: return "ds-gb";
    case Variant::kDsDs: return "ds-ds";
    case Variant::kFgls: return "fgls";
  }
  throw ValidationError("unknown variant");
}

Variant parse_variant(const std::string& label) {
  if (label == "ls-gb") return Variant::kLsGb;
  if (label == "gb-gb") return Variant::kGbGb;
  if (label == "ds-gb") return Variant::kDsGb;
  if (label == "ds-ds") return Variant::kDsDs;
  if (label == "fgls") return Variant::kFgls;
  throw ValidationError("unknown variant '" + label + "'");
}

void FitConfig::check() const {
  if (!(subsample_fraction > 0.0 && subsample_fraction < 1.0)) {
    throw ValidationError("config: subsample fraction must be in (0, 1)");
  }
  if (folds < 2) throw ValidationError("config: folds must be >= 2");
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("config: tau must be in (0, 1)");
  if (m_max < 1) throw ValidationError("config: m_max must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ValidationError("config: learning rate must be in (0, 1]");
  }
}

FitConfig FitConfig::for_variant(Variant v, const FitConfig& base) {
  FitConfig cfg = base;
  switch (v) {
    case Variant::kLsGb:
    case Variant::kFgls:
      cfg.first_step = FirstStep::kOls;
      cfg.final_deselect = false;
      break;
    case Variant::kGbGb:
      cfg.first_step = FirstStep::kBoost;
      cfg.final_deselect = false;
      break;
    case Variant::kDsGb:
      cfg.first_step = FirstStep::kBoostDeselect;
      cfg.final_deselect = false;
      break;
    case Variant::kDsDs:
      cfg.first_step = FirstStep::kBoostDeselect;
      cfg.final_deselect = true;
      break;
  }
  return cfg;
}

TuneResult tune_mstop(const DesignBlock& design, const Eigen::VectorXd& y,
                      const Family& family, const FitConfig& cfg,
                      std::uint64_t fold_seed) {
  cfg.check();
  const int n = design.n();
  const int in_size = static_cast<int>(cfg.subsample_fraction * n);
  if (in_size < 1 || in_size >= n) {
    throw ValidationError("tune_mstop: degenerate fold (no held-out points)");
  }

  std::vector<double> mean_curve(cfg.m_max, 0.0);
  for (int f = 0; f < cfg.folds; ++f) {
    auto gen = rng::engine(rng::derive(fold_seed, f));
    const std::vector<int> in_idx =
        rng::sample_without_replacement(n, in_size, gen);
    Eigen::VectorXd w_in = Eigen::VectorXd::Zero(n);
    for (int i : in_idx) w_in[i] = 1.0;
    const Eigen::VectorXd w_out = Eigen::VectorXd::Ones(n) - w_in;

    std::vector<double>& curve = mean_curve;
    boost_fit(design, y, family, cfg.m_max, cfg.learning_rate, &w_in,
              [&](int m, const Eigen::VectorXd& eta) {
                curve[m - 1] += w_out.dot(family.pointwise_risk(y, eta));
              });
  }
  for (double& v : mean_curve) v /= cfg.folds;

  TuneResult result;
  result.oob_risk = std::move(mean_curve);
  result.m_opt = 1;
  for (int m = 2; m <= cfg.m_max; ++m) {
    if (result.oob_risk[m - 1] < result.oob_risk[result.m_opt - 1]) {
      result.m_opt = m;
    }
  }
  return result;
}

namespace {

// Fits the restricted design on the retained columns and scatters the
// coefficients back into full-width vectors. Empty retained set yields the
// empty model.
struct RefitOutcome {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd eta;
  std::vector<double> risks;
};

RefitOutcome refit_retained(const DesignBlock& design, const Eigen::VectorXd& y,
                            const Family& family,
                            const std::vector<int>& retained, int m_opt,
                            double learning_rate) {
  RefitOutcome out;
  out.coefficients = Eigen::VectorXd::Zero(design.q());
  if (retained.empty()) {
    out.eta = Eigen::VectorXd::Zero(design.n());
    return out;
  }
  DesignBlock sub;
  sub.columns.resize(design.n(), static_cast<int>(retained.size()));
  for (std::size_t j = 0; j < retained.size(); ++j) {
    sub.columns.col(static_cast<int>(j)) = design.columns.col(retained[j]);
    sub.names.push_back(design.names[retained[j]]);
  }
  BoostPath path = boost_fit(sub, y, family, m_opt, learning_rate);
  out.intercept = path.intercept;
  for (std::size_t j = 0; j < retained.size(); ++j) {
    out.coefficients[retained[j]] = path.coefficients[static_cast<int>(j)];
  }
  out.eta = path.eta;
  out.risks.push_back(path.initial_risk);
  for (const auto& rec : path.steps) out.risks.push_back(rec.risk);
  return out;
}

std::vector<double> risk_path_of(const BoostPath& path) {
  std::vector<double> risks;
  risks.reserve(path.steps.size() + 1);
  risks.push_back(path.initial_risk);
  for (const auto& rec : path.steps) risks.push_back(rec.risk);
  return risks;
}

// Substream tags for the two tuning passes.
constexpr std::uint64_t kFirstStepFoldTag = 101;
constexpr std::uint64_t kThirdStepFoldTag = 301;

}  // namespace

FirstStepResult first_step(const DesignBlock& design, const Eigen::VectorXd& y,
                           const FitConfig& cfg) {
  cfg.check();
  const int n = design.n();
  const int q = design.q();
  FirstStepResult result;

  if (cfg.first_step == FirstStep::kOls) {
    if (q + 1 > n) {
      throw EstimationError(
          "first_step: OLS rank deficiency (q + 1 > n); use a boosting first step");
    }
    Eigen::MatrixXd zt(n, q + 1);
    zt.col(0).setOnes();
    zt.rightCols(q) = design.columns;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(zt);
    if (qr.rank() < q + 1) {
      throw EstimationError("first_step: OLS design is rank deficient");
    }
    const Eigen::VectorXd coef = qr.solve(y);
    result.intercept = coef[0];
    result.coefficients = coef.tail(q);
    result.residuals = y - zt * coef;
    return result;
  }

  const Family fam = Family::squared_error();
  const TuneResult tuned =
      tune_mstop(design, y, fam, cfg, rng::derive(cfg.seed, kFirstStepFoldTag));
  result.m_opt = tuned.m_opt;
  BoostPath path = boost_fit(design, y, fam, tuned.m_opt, cfg.learning_rate);

  if (cfg.first_step == FirstStep::kBoost) {
    result.intercept = path.intercept;
    result.coefficients = path.coefficients;
    result.residuals = y - path.eta;
    return result;
  }

  // Boosting with deselection: drop low-attribution columns and refit with
  // the remaining variables at the same stopping iteration.
  const DeselectionReport report = deselect(path, cfg.tau);
  const RefitOutcome refit = refit_retained(design, y, fam, report.retained,
                                            tuned.m_opt, cfg.learning_rate);
  result.intercept = refit.intercept;
  result.coefficients = refit.coefficients;
  result.residuals = y - refit.eta;
  return result;
}

FitResult fit_sdem(const DesignBlock& design, const Eigen::VectorXd& y,
                   const WeightMatrix& w, const FitConfig& cfg) {
  cfg.check();
  if (!w.row_normalized()) {
    throw ValidationError("fit_sdem: weight matrix must be row-normalized");
  }

  // Step 1: consistent estimate ignoring the disturbance structure.
  const FirstStepResult step1 = first_step(design, y, cfg);

  // Step 2: generalized moments on the first-step residuals.
  const MomentSystem sys = build_moment_system(step1.residuals, w);
  const MomentEstimate est = nls_estimate(sys);
  const double sigma2 = std::max(est.sigma2_hat, kSigma2Floor);
  const SpatialErrorStructure structure =
      make_spatial_structure(w, est.lambda_hat, sigma2);
  const Family fam = Family::spatial_error(structure);

  // Step 3: boosting under the estimated spatial-error family.
  const TuneResult tuned =
      tune_mstop(design, y, fam, cfg, rng::derive(cfg.seed, kThirdStepFoldTag));
  BoostPath path = boost_fit(design, y, fam, tuned.m_opt, cfg.learning_rate);

  FitResult result;
  result.lambda_hat = est.lambda_hat;
  result.sigma2_hat = sigma2;
  result.names = design.names;
  result.m_opt = tuned.m_opt;
  result.m_opt_first = step1.m_opt;

  if (cfg.final_deselect) {
    const DeselectionReport report = deselect(path, cfg.tau);
    const RefitOutcome refit = refit_retained(design, y, fam, report.retained,
                                              tuned.m_opt, cfg.learning_rate);
    result.intercept = refit.intercept;
    result.coefficients = refit.coefficients;
    result.risk_path = refit.risks;
  } else {
    result.intercept = path.intercept;
    result.coefficients = path.coefficients;
    result.risk_path = risk_path_of(path);
  }
  for (int j = 0; j < result.coefficients.size(); ++j) {
    if (result.coefficients[j] != 0.0) result.selected.push_back(design.names[j]);
  }
  return result;
}

FitResult fit_fgls_pipeline(const DesignBlock& design, const Eigen::VectorXd& y,
                            const WeightMatrix& w, const FitConfig& cfg) {
  FitConfig ols_cfg = cfg;
  ols_cfg.first_step = FirstStep::kOls;
  const FirstStepResult step1 = first_step(design, y, ols_cfg);
  const MomentSystem sys = build_moment_system(step1.residuals, w);
  const MomentEstimate est = nls_estimate(sys);
  const double sigma2 = std::max(est.sigma2_hat, kSigma2Floor);
  const SpatialErrorStructure structure =
      make_spatial_structure(w, est.lambda_hat, sigma2);
  auto [intercept, coef] = fit_fgls(design, y, structure);

  FitResult result;
  result.lambda_hat = est.lambda_hat;
  result.sigma2_hat = sigma2;
  result.intercept = intercept;
  result.coefficients = coef;
  result.names = design.names;
  result.variant = variant_label(Variant::kFgls);
  for (int j = 0; j < coef.size(); ++j) {
    if (coef[j] != 0.0) result.selected.push_back(design.names[j]);
  }
  return result;
}

FitResult fit_variant(Variant v, const DesignBlock& design,
                      const Eigen::VectorXd& y, const WeightMatrix& w,
                      const FitConfig& cfg) {
  const FitConfig vcfg = FitConfig::for_variant(v, cfg);
  FitResult result = (v == Variant::kFgls) ? fit_fgls_pipeline(design, y, w, vcfg)
                                           : fit_sdem(design, y, w, vcfg);
  result.variant = variant_label(v);
  return result;
}

Eigen::VectorXd predict(const FitResult& fit, const DesignBlock& z_new) {
  std::unordered_map<std::string, int> index;
  for (int j = 0; j < z_new.q(); ++j) index[z_new.names[j]] = j;
  Eigen::VectorXd eta =
      Eigen::VectorXd::Constant(z_new.n(), fit.intercept);
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    const auto it = index.find(fit.names[j]);
    if (it == index.end()) {
      throw ValidationError("predict: column '" + fit.names[j] +
                            "' missing from new design");
    }
    eta += fit.coefficients[static_cast<int>(j)] * z_new.columns.col(it->second);
  }
  return eta;
}

}  // namespace spatboost
