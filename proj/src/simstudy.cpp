#include "spatboost/simstudy.hpp"

#include <Eigen/SparseLU>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace spatboost {

void ScenarioConfig::check() const {
  if (n < 3) throw ValidationError("scenario: n too small");
  if (q < 2 || q % 2 != 0) throw ValidationError("scenario: q must be even and >= 2");
  if (!(std::abs(lambda) < 1.0)) throw ValidationError("scenario: |lambda| < 1 required");
  if (!(sigma2 > 0.0)) throw ValidationError("scenario: sigma2 > 0 required");
  if (n <= 2 * k) throw ValidationError("scenario: circular weights need n > 2K");
  if (n_test <= 2 * k) throw ValidationError("scenario: n_test too small for K");
  if (n_sim < 1) throw ValidationError("scenario: n_sim must be >= 1");
  if (variants.empty()) throw ValidationError("scenario: no variants requested");
  fit_config().check();
}

FitConfig ScenarioConfig::fit_config() const {
  FitConfig cfg;
  cfg.learning_rate = learning_rate;
  cfg.m_max = m_max;
  cfg.folds = folds;
  cfg.subsample_fraction = subsample_fraction;
  cfg.tau = tau;
  return cfg;
}

Dataset generate_dgp(const ScenarioConfig& cfg, std::uint64_t rep_seed) {
  cfg.check();
  const int n = cfg.n;
  const int p = cfg.q / 2;
  auto gen = rng::engine(rep_seed);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::normal_distribution<double> norm(0.0, std::sqrt(cfg.sigma2));

  Eigen::MatrixXd x(n, p);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i < n; ++i) x(i, j) = unif(gen);
  }
  Eigen::VectorXd eps(n);
  for (int i = 0; i < n; ++i) eps[i] = norm(gen);

  WeightMatrix w = row_normalize(build_circular(n, cfg.k));
  const Eigen::MatrixXd wx = w.lag(x);

  // u = (I - lambda W)^{-1} eps via sparse solve.
  const SpatialErrorStructure s = make_spatial_structure(w, cfg.lambda, cfg.sigma2);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(Eigen::SparseMatrix<double>(s.precision));
  if (lu.info() != Eigen::Success) {
    throw EstimationError("generate_dgp: I - lambda*W is singular");
  }
  const Eigen::VectorXd u = lu.solve(eps);

  Dataset data{Eigen::VectorXd(), DesignBlock(), std::move(w)};
  data.design.columns.resize(n, cfg.q);
  data.design.columns.leftCols(p) = x;
  data.design.columns.rightCols(p) = wx;
  data.design.names.reserve(cfg.q);
  data.design.truth_mask.assign(cfg.q, 0);
  for (int j = 0; j < p; ++j) data.design.names.push_back("X" + std::to_string(j + 1));
  for (int j = 0; j < p; ++j) data.design.names.push_back("W.X" + std::to_string(j + 1));
  data.design.truth_mask[0] = data.design.truth_mask[1] = 1;
  data.design.truth_mask[p] = data.design.truth_mask[p + 1] = 1;

  data.y = Eigen::VectorXd::Ones(n) + 3.5 * x.col(0) - 2.5 * x.col(1) -
           4.0 * wx.col(0) + 3.0 * wx.col(1) + u;
  return data;
}

SelectionRates selection_metrics(const std::set<std::string>& selected,
                                 const std::set<std::string>& truth, int q) {
  if (truth.empty()) throw ValidationError("selection_metrics: empty truth set");
  int tp = 0, fp = 0;
  for (const auto& name : selected) {
    if (truth.count(name)) ++tp; else ++fp;
  }
  const int n_noise = q - static_cast<int>(truth.size());
  const int tn = n_noise - fp;
  SelectionRates rates;
  rates.tpr = 100.0 * tp / static_cast<double>(truth.size());
  rates.tnr = n_noise > 0 ? 100.0 * tn / static_cast<double>(n_noise) : 100.0;
  // Empty selection yields FDR 0 (no discoveries, no false ones).
  rates.fdr = 100.0 * fp / std::max<double>(selected.size(), 1.0);
  return rates;
}

EstimationSummary estimation_metrics(const std::vector<double>& lambda_hats,
                                     double lambda_true) {
  if (lambda_hats.size() < 2) {
    throw ValidationError("estimation_metrics: need >= 2 replications for ESE");
  }
  const double m = static_cast<double>(lambda_hats.size());
  EstimationSummary s;
  double mean = 0.0;
  for (double l : lambda_hats) {
    s.bias += l - lambda_true;
    s.mse += (l - lambda_true) * (l - lambda_true);
    mean += l;
  }
  s.bias /= m;
  s.mse /= m;
  mean /= m;
  double ss = 0.0;
  for (double l : lambda_hats) ss += (l - mean) * (l - mean);
  s.ese = std::sqrt(ss / (m - 1.0));
  return s;
}

PredictionSummary prediction_metrics(const Eigen::VectorXd& y_test,
                                     const Eigen::VectorXd& eta_hat,
                                     const SpatialErrorStructure& structure) {
  if (y_test.size() != eta_hat.size() || structure.size() != y_test.size()) {
    throw ValidationError("prediction_metrics: dimension mismatch");
  }
  if (!y_test.allFinite() || !eta_hat.allFinite()) {
    throw ValidationError("prediction_metrics: non-finite inputs");
  }
  const Eigen::VectorXd r = y_test - eta_hat;
  const double n = static_cast<double>(y_test.size());
  PredictionSummary s;
  s.rmsep = std::sqrt(r.squaredNorm() / n);
  s.maep = r.lpNorm<1>() / n;
  // Quasi negative log-likelihood, reading the sigma terms as the variance.
  const Eigen::VectorXd e = structure.precision * r;
  s.nll = 0.5 * n * (std::log(2.0 * M_PI * structure.sigma2) + 1.0) -
          log_det_precision(structure) +
          e.squaredNorm() / (2.0 * structure.sigma2);
  return s;
}

namespace {

constexpr std::uint64_t kTrainTag = 0;
constexpr std::uint64_t kTestTag = 1;
constexpr std::uint64_t kVariantTagBase = 1000;

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 12);
  return std::string(buf, ptr);
}

// Worker-count override for the replication loop; 0 or unset means serial.
int worker_count() {
  const char* env = std::getenv("SPATBOOST_WORKERS");
  if (env == nullptr) return 1;
  const int parsed = std::atoi(env);
  return parsed > 1 ? parsed : 1;
}

}  // namespace

MetricsTable run_study(const ScenarioConfig& cfg, const StudyLogger& log) {
  cfg.check();
  MetricsTable table;
  table.scenario = cfg;

  std::set<std::string> truth;
  struct RepOutcome {
    bool ok = false;
    SelectionRates sel;
    double lambda_hat = 0.0;
    PredictionSummary pred;
    int m_opt = 0;
    std::string error;
  };
  // outcome[variant][rep]
  std::vector<std::vector<RepOutcome>> outcomes(
      cfg.variants.size(), std::vector<RepOutcome>(cfg.n_sim));
  std::vector<std::string> skip_reasons(cfg.variants.size());

  ScenarioConfig test_cfg = cfg;
  test_cfg.n = cfg.n_test;

  // The informative set is fixed by the generator, not by the draw.
  {
    const Dataset probe =
        generate_dgp(cfg, rng::derive(rng::derive(cfg.seed, 0), kTrainTag));
    for (int j = 0; j < probe.design.q(); ++j) {
      if (probe.design.truth_mask[j]) truth.insert(probe.design.names[j]);
    }
  }
  for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
    const Variant v = cfg.variants[vi];
    const bool needs_ols = (v == Variant::kLsGb || v == Variant::kFgls);
    if (needs_ols && cfg.q + 1 > cfg.n) {
      skip_reasons[vi] = "skipped: OLS first step infeasible with q + 1 > n";
    }
  }

  std::mutex log_mutex;
  const auto log_line = [&](const std::string& line) {
    if (!log) return;
    const std::lock_guard<std::mutex> guard(log_mutex);
    log(line);
  };

  const auto run_rep = [&](int rep) {
    const std::uint64_t rep_seed = rng::derive(cfg.seed, rep);
    const Dataset train = generate_dgp(cfg, rng::derive(rep_seed, kTrainTag));
    const Dataset test = generate_dgp(test_cfg, rng::derive(rep_seed, kTestTag));

    for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
      if (!skip_reasons[vi].empty()) continue;
      const Variant v = cfg.variants[vi];
      RepOutcome& out = outcomes[vi][rep];
      try {
        FitConfig fit_cfg = cfg.fit_config();
        fit_cfg.seed = rng::derive(rep_seed, kVariantTagBase + vi);
        const FitResult fit = fit_variant(v, train.design, train.y,
                                          train.weights, fit_cfg);
        const std::set<std::string> selected(fit.selected.begin(),
                                             fit.selected.end());
        out.sel = selection_metrics(selected, truth, cfg.q);
        out.lambda_hat = fit.lambda_hat;
        out.m_opt = fit.m_opt;
        const Eigen::VectorXd eta_test = predict(fit, test.design);
        const SpatialErrorStructure test_structure = make_spatial_structure(
            test.weights, fit.lambda_hat, fit.sigma2_hat);
        out.pred = prediction_metrics(test.y, eta_test, test_structure);
        out.ok = true;
      } catch (const std::exception& e) {
        out.error = e.what();
        log_line("rep " + std::to_string(rep) + " variant " +
                 variant_label(v) + " failed: " + e.what());
      }
    }
    log_line("replication " + std::to_string(rep + 1) + "/" +
             std::to_string(cfg.n_sim) + " done");
  };

  // Replications are independent; outcomes are aggregated in replication
  // order below, so results do not depend on the worker count.
  const int workers = std::min(worker_count(), cfg.n_sim);
  if (workers <= 1) {
    for (int rep = 0; rep < cfg.n_sim; ++rep) run_rep(rep);
  } else {
    std::atomic<int> next_rep{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (int rep = next_rep.fetch_add(1); rep < cfg.n_sim;
             rep = next_rep.fetch_add(1)) {
          run_rep(rep);
        }
      });
    }
    for (std::thread& t : pool) t.join();
  }

  for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
    VariantMetrics row;
    row.variant = variant_label(cfg.variants[vi]);
    row.note = skip_reasons[vi];
    std::vector<double> lambda_hats;
    for (const RepOutcome& out : outcomes[vi]) {
      if (!skip_reasons[vi].empty()) continue;
      ++row.attempted;
      if (!out.ok) {
        if (row.note.empty()) row.note = out.error;
        continue;
      }
      ++row.succeeded;
      row.selection.tpr += out.sel.tpr;
      row.selection.tnr += out.sel.tnr;
      row.selection.fdr += out.sel.fdr;
      row.prediction.rmsep += out.pred.rmsep;
      row.prediction.maep += out.pred.maep;
      row.prediction.nll += out.pred.nll;
      row.mean_m_opt += out.m_opt;
      lambda_hats.push_back(out.lambda_hat);
    }
    if (row.succeeded > 0) {
      const double m = row.succeeded;
      row.selection.tpr /= m;
      row.selection.tnr /= m;
      row.selection.fdr /= m;
      row.prediction.rmsep /= m;
      row.prediction.maep /= m;
      row.prediction.nll /= m;
      row.mean_m_opt /= m;
    }
    if (lambda_hats.size() >= 2) {
      row.estimation = estimation_metrics(lambda_hats, cfg.lambda);
    } else if (lambda_hats.size() == 1) {
      row.estimation.bias = lambda_hats[0] - cfg.lambda;
      row.estimation.mse = row.estimation.bias * row.estimation.bias;
      row.estimation.ese = 0.0;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string metrics_csv_header() {
  return "n,q,lambda,sigma2,K,n_sim,seed,variant,attempted,succeeded,"
         "tpr,tnr,fdr,bias,mse,ese,rmsep,maep,nll,mean_m_opt,note";
}

std::string metrics_to_csv(const MetricsTable& table, bool with_header) {
  std::ostringstream out;
  if (with_header) out << metrics_csv_header() << "\n";
  const ScenarioConfig& c = table.scenario;
  for (const VariantMetrics& r : table.rows) {
    out << c.n << ',' << c.q << ',' << fmt(c.lambda) << ',' << fmt(c.sigma2)
        << ',' << c.k << ',' << c.n_sim << ',' << c.seed << ',' << r.variant
        << ',' << r.attempted << ',' << r.succeeded << ','
        << fmt(r.selection.tpr) << ',' << fmt(r.selection.tnr) << ','
        << fmt(r.selection.fdr) << ',' << fmt(r.estimation.bias) << ','
        << fmt(r.estimation.mse) << ',' << fmt(r.estimation.ese) << ','
        << fmt(r.prediction.rmsep) << ',' << fmt(r.prediction.maep) << ','
        << fmt(r.prediction.nll) << ',' << fmt(r.mean_m_opt) << ','
        << '"' << r.note << '"' << "\n";
  }
  return out.str();
}

std::string metrics_to_json(const MetricsTable& table) {
  nlohmann::json j;
  const ScenarioConfig& c = table.scenario;
  j["scenario"] = {{"n", c.n},         {"q", c.q},
                   {"lambda", c.lambda}, {"sigma2", c.sigma2},
                   {"k", c.k},         {"n_sim", c.n_sim},
                   {"n_test", c.n_test}, {"seed", c.seed},
                   {"learning_rate", c.learning_rate},
                   {"m_max", c.m_max}, {"folds", c.folds},
                   {"subsample_fraction", c.subsample_fraction},
                   {"tau", c.tau}};
  j["variants"] = nlohmann::json::array();
  for (const VariantMetrics& r : table.rows) {
    j["variants"].push_back(
        {{"variant", r.variant},
         {"attempted", r.attempted},
         {"succeeded", r.succeeded},
         {"tpr", r.selection.tpr},
         {"tnr", r.selection.tnr},
         {"fdr", r.selection.fdr},
         {"bias", r.estimation.bias},
         {"mse", r.estimation.mse},
         {"ese", r.estimation.ese},
         {"rmsep", r.prediction.rmsep},
         {"maep", r.prediction.maep},
         {"nll", r.prediction.nll},
         {"mean_m_opt", r.mean_m_opt},
         {"note", r.note}});
  }
  return j.dump(2);
}

}  // namespace spatboost
