#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "spatboost/io.hpp"
#include "spatboost/pipeline.hpp"
#include "spatboost/simstudy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spatboost;

namespace {

class ManifestWriter {
 public:
  ManifestWriter(std::string command, json config)
      : command_(std::move(command)),
        config_(std::move(config)),
        start_(std::chrono::steady_clock::now()) {}

  void add_input(const std::string& path) { inputs_[path] = file_digest(path); }

  void write(const std::string& path) const {
    json m;
    m["command"] = command_;
    m["version"] = kVersion;
    m["config"] = config_;
    m["inputs"] = inputs_;
    m["duration_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start_)
                           .count();
    write_file(path, m.dump(2) + "\n");
  }

 private:
  std::string command_;
  json config_;
  std::map<std::string, std::string> inputs_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

WeightMatrix load_normalized_weights(const std::string& path) {
  WeightMatrix raw = read_weight_csv(path, false);
  const SparseMat& m = raw.matrix();
  for (int i = 0; i < m.outerSize(); ++i) {
    double sum = 0.0;
    for (SparseMat::InnerIterator it(m, i); it; ++it) sum += it.value();
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ValidationError(path + ": row " + std::to_string(i) +
                            " does not sum to 1; run `spatboost weights "
                            "--normalize` first");
    }
  }
  return WeightMatrix(raw.matrix(), true);
}

struct StandardizeTransform {
  std::vector<double> center;
  std::vector<double> scale;
};

StandardizeTransform standardize_columns(Eigen::MatrixXd& columns) {
  StandardizeTransform t;
  for (int j = 0; j < columns.cols(); ++j) {
    const double mean = columns.col(j).mean();
    columns.col(j).array() -= mean;
    double sd = std::sqrt(columns.col(j).squaredNorm() /
                          std::max<double>(columns.rows() - 1, 1));
    if (sd <= 0.0) sd = 1.0;
    columns.col(j) /= sd;
    t.center.push_back(mean);
    t.scale.push_back(sd);
  }
  return t;
}

// Builds the fit design from a data table: response removed, optional W.*
// lag columns appended, optional standardization.
struct FitDesign {
  DesignBlock design;
  Eigen::VectorXd y;
  bool has_response = false;
  StandardizeTransform transform;
};

FitDesign build_design(const DataTable& data, const std::string& response,
                       const WeightMatrix* w, bool lags, bool standardize) {
  FitDesign out;
  const int resp = data.column_index(response);
  if (resp < 0) {
    throw ValidationError("response column '" + response + "' not found");
  }
  out.has_response = true;
  out.y = data.values.col(resp);
  const int p = static_cast<int>(data.names.size()) - 1;
  out.design.columns.resize(data.values.rows(), lags ? 2 * p : p);
  int j = 0;
  for (std::size_t c = 0; c < data.names.size(); ++c) {
    if (static_cast<int>(c) == resp) continue;
    out.design.columns.col(j) = data.values.col(static_cast<int>(c));
    out.design.names.push_back(data.names[c]);
    ++j;
  }
  if (lags) {
    if (!w) throw ValidationError("--lags requires --weights");
    out.design.columns.rightCols(p) =
        w->lag(Eigen::MatrixXd(out.design.columns.leftCols(p)));
    for (int c = 0; c < p; ++c) {
      out.design.names.push_back("W." + out.design.names[c]);
    }
  }
  if (standardize) {
    out.transform = standardize_columns(out.design.columns);
  }
  return out;
}

int cmd_weights(const std::string& mode, int n, int k,
                const std::string& coords_path, bool normalize,
                const std::string& out_path) {
  json config = {{"mode", mode}, {"k", k}, {"normalize", normalize},
                 {"out", out_path}};
  ManifestWriter manifest("weights", config);

  WeightMatrix w = [&] {
    if (mode == "circular") {
      config["n"] = n;
      return build_circular(n, k);
    }
    if (mode == "knn") {
      if (coords_path.empty()) throw ValidationError("knn mode needs --coords");
      manifest.add_input(coords_path);
      return build_knn(read_coords_csv(coords_path), k);
    }
    throw ValidationError("unknown mode '" + mode + "'");
  }();
  if (normalize) w = row_normalize(w);

  write_weight_csv(out_path, w);
  manifest.write(out_path + ".manifest.json");

  double max_row_sum = 0.0;
  const SparseMat& m = w.matrix();
  for (int i = 0; i < m.outerSize(); ++i) {
    double sum = 0.0;
    for (SparseMat::InnerIterator it(m, i); it; ++it) sum += it.value();
    max_row_sum = std::max(max_row_sum, sum);
  }
  std::cout << "rows: " << w.size() << "\nnnz: " << w.nonzeros()
            << "\nmax_row_sum: " << max_row_sum << "\n";
  return 0;
}

json fit_to_json(const FitResult& fit, const std::string& response, bool lags,
                 bool standardize, const FitDesign& design) {
  json j;
  j["version"] = kVersion;
  j["variant"] = fit.variant;
  j["response"] = response;
  j["lags"] = lags;
  j["lambda_hat"] = fit.lambda_hat;
  j["sigma2_hat"] = fit.sigma2_hat;
  j["intercept"] = fit.intercept;
  j["m_opt"] = fit.m_opt;
  j["m_opt_first"] = fit.m_opt_first;
  j["selected"] = fit.selected;
  j["risk_path"] = fit.risk_path;
  json coefs = json::array();
  for (std::size_t c = 0; c < fit.names.size(); ++c) {
    coefs.push_back({{"name", fit.names[c]},
                     {"estimate", fit.coefficients[static_cast<int>(c)]}});
  }
  j["coefficients"] = coefs;
  if (standardize) {
    j["standardize"] = {{"center", design.transform.center},
                        {"scale", design.transform.scale}};
  }
  return j;
}

int cmd_fit(const std::string& data_path, const std::string& response,
            const std::string& weights_path, const std::string& variant_label_,
            bool lags, bool standardize, const FitConfig& base_cfg,
            const std::string& out_dir) {
  const Variant variant = parse_variant(variant_label_);
  json config = {{"data", data_path},   {"response", response},
                 {"weights", weights_path}, {"variant", variant_label_},
                 {"lags", lags},        {"standardize", standardize},
                 {"step", base_cfg.learning_rate}, {"mmax", base_cfg.m_max},
                 {"folds", base_cfg.folds}, {"tau", base_cfg.tau},
                 {"seed", base_cfg.seed}};
  ManifestWriter manifest("fit", config);
  manifest.add_input(data_path);
  manifest.add_input(weights_path);

  const DataTable data = read_data_csv(data_path);
  const WeightMatrix w = load_normalized_weights(weights_path);
  if (w.size() != data.values.rows()) {
    throw ValidationError("weight matrix size does not match data rows");
  }
  const FitDesign design = build_design(data, response, &w, lags, standardize);
  const FitResult fit =
      fit_variant(variant, design.design, design.y, w, base_cfg);

  fs::create_directories(out_dir);
  std::ostringstream coef_csv;
  coef_csv << "name,estimate\n(Intercept)," << fmt(fit.intercept) << "\n";
  for (std::size_t c = 0; c < fit.names.size(); ++c) {
    coef_csv << fit.names[c] << ',' << fmt(fit.coefficients[static_cast<int>(c)])
             << "\n";
  }
  write_file(out_dir + "/coefficients.csv", coef_csv.str());
  write_file(out_dir + "/fit.json",
             fit_to_json(fit, response, lags, standardize, design).dump(2) + "\n");
  manifest.write(out_dir + "/manifest.json");

  std::cout << "variant: " << fit.variant << "\nlambda_hat: " << fit.lambda_hat
            << "\nsigma2_hat: " << fit.sigma2_hat << "\nm_opt: " << fit.m_opt
            << "\nselected: " << fit.selected.size() << " of "
            << fit.names.size() << " columns\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& weights_path, const std::string& out_path) {
  json config = {{"model", model_path}, {"data", data_path},
                 {"weights", weights_path}, {"out", out_path}};
  ManifestWriter manifest("predict", config);
  manifest.add_input(model_path);
  manifest.add_input(data_path);

  const json model = json::parse(read_file(model_path));
  const DataTable data = read_data_csv(data_path);

  FitResult fit;
  fit.intercept = model.at("intercept").get<double>();
  fit.lambda_hat = model.at("lambda_hat").get<double>();
  fit.sigma2_hat = model.at("sigma2_hat").get<double>();
  for (const auto& c : model.at("coefficients")) {
    fit.names.push_back(c.at("name").get<std::string>());
  }
  fit.coefficients.resize(static_cast<int>(fit.names.size()));
  for (int c = 0; c < fit.coefficients.size(); ++c) {
    fit.coefficients[c] = model.at("coefficients")[c].at("estimate").get<double>();
  }

  bool needs_lags = false;
  for (const auto& name : fit.names) {
    if (name.rfind("W.", 0) == 0) needs_lags = true;
  }
  std::optional<WeightMatrix> w;
  if (needs_lags) {
    if (weights_path.empty()) {
      throw ValidationError("model uses W.* lag columns; --weights is required");
    }
    manifest.add_input(weights_path);
    w = load_normalized_weights(weights_path);
  }

  const std::string response = model.at("response").get<std::string>();
  const int resp = data.column_index(response);

  // Rebuild the design the fit command produced, applying the stored
  // standardization transform when present.
  DesignBlock design;
  const int p = static_cast<int>(data.names.size()) - (resp >= 0 ? 1 : 0);
  const bool lags = model.at("lags").get<bool>();
  design.columns.resize(data.values.rows(), lags ? 2 * p : p);
  int j = 0;
  for (std::size_t c = 0; c < data.names.size(); ++c) {
    if (static_cast<int>(c) == resp) continue;
    design.columns.col(j) = data.values.col(static_cast<int>(c));
    design.names.push_back(data.names[c]);
    ++j;
  }
  if (lags) {
    if (!w) throw ValidationError("model uses lag columns; --weights required");
    if (w->size() != data.values.rows()) {
      throw ValidationError("weight matrix size does not match data rows");
    }
    design.columns.rightCols(p) =
        w->lag(Eigen::MatrixXd(design.columns.leftCols(p)));
    for (int c = 0; c < p; ++c) design.names.push_back("W." + design.names[c]);
  }
  if (model.contains("standardize")) {
    const auto center = model["standardize"]["center"].get<std::vector<double>>();
    const auto scale = model["standardize"]["scale"].get<std::vector<double>>();
    if (center.size() != static_cast<std::size_t>(design.columns.cols())) {
      throw ValidationError("standardize transform does not match design width");
    }
    for (int c = 0; c < design.columns.cols(); ++c) {
      design.columns.col(c).array() -= center[c];
      design.columns.col(c) /= scale[c];
    }
  }

  const Eigen::VectorXd eta = predict(fit, design);
  std::ostringstream out;
  out << "eta\n";
  for (int i = 0; i < eta.size(); ++i) out << fmt(eta[i]) << "\n";
  write_file(out_path, out.str());
  manifest.write(out_path + ".manifest.json");

  if (resp >= 0) {
    const Eigen::VectorXd r = data.values.col(resp) - eta;
    const double n = static_cast<double>(r.size());
    std::cout << "RMSEP: " << std::sqrt(r.squaredNorm() / n)
              << "\nMAEP: " << r.lpNorm<1>() / n << "\n";
  }
  return 0;
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig cfg;
  if (j.contains("n")) cfg.n = j["n"].get<int>();
  if (j.contains("q")) cfg.q = j["q"].get<int>();
  if (j.contains("lambda")) cfg.lambda = j["lambda"].get<double>();
  if (j.contains("sigma2")) cfg.sigma2 = j["sigma2"].get<double>();
  if (j.contains("k")) cfg.k = j["k"].get<int>();
  if (j.contains("n_sim")) cfg.n_sim = j["n_sim"].get<int>();
  if (j.contains("n_test")) cfg.n_test = j["n_test"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("m_max")) cfg.m_max = j["m_max"].get<int>();
  if (j.contains("folds")) cfg.folds = j["folds"].get<int>();
  if (j.contains("subsample_fraction")) {
    cfg.subsample_fraction = j["subsample_fraction"].get<double>();
  }
  if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
  if (j.contains("variants")) {
    cfg.variants.clear();
    for (const auto& v : j["variants"]) {
      cfg.variants.push_back(parse_variant(v.get<std::string>()));
    }
  }
  return cfg;
}

void emit_replication_data(const ScenarioConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  const std::uint64_t rep_seed = rng::derive(cfg.seed, 0);
  const Dataset train = generate_dgp(cfg, rng::derive(rep_seed, 0));
  ScenarioConfig test_cfg = cfg;
  test_cfg.n = cfg.n_test;
  const Dataset test = generate_dgp(test_cfg, rng::derive(rep_seed, 1));

  const auto dump = [](const Dataset& d, const std::string& data_path,
                       const std::string& weights_path) {
    const int p = d.design.q() / 2;
    DataTable table;
    table.names.push_back("y");
    for (int j = 0; j < p; ++j) table.names.push_back(d.design.names[j]);
    table.values.resize(d.y.size(), p + 1);
    table.values.col(0) = d.y;
    table.values.rightCols(p) = d.design.columns.leftCols(p);
    write_data_csv(data_path, table);
    write_weight_csv(weights_path, d.weights);
  };
  dump(train, dir + "/train.csv", dir + "/train_weights.csv");
  dump(test, dir + "/test.csv", dir + "/test_weights.csv");
}

int cmd_simulate(const std::string& scenario_path, int nsim_override,
                 double lambda_override, bool has_lambda, int q_override,
                 const std::string& k_list, long long seed_override,
                 const std::string& emit_dir, const std::string& out_dir) {
  json config = {{"scenario", scenario_path}, {"out", out_dir}};
  ManifestWriter manifest("simulate", config);

  ScenarioConfig base;
  if (!scenario_path.empty()) {
    manifest.add_input(scenario_path);
    base = scenario_from_json(json::parse(read_file(scenario_path)));
  }
  if (nsim_override > 0) base.n_sim = nsim_override;
  if (has_lambda) base.lambda = lambda_override;
  if (q_override > 0) base.q = q_override;
  if (seed_override >= 0) base.seed = static_cast<std::uint64_t>(seed_override);

  std::vector<int> k_values;
  if (!k_list.empty()) {
    std::stringstream ss(k_list);
    std::string item;
    while (std::getline(ss, item, ',')) k_values.push_back(std::stoi(item));
  } else {
    k_values.push_back(base.k);
  }

  fs::create_directories(out_dir);
  std::string csv = metrics_csv_header() + "\n";
  json summary = json::array();
  for (int k : k_values) {
    ScenarioConfig cfg = base;
    cfg.k = k;
    cfg.check();
    if (cfg.q + 1 > cfg.n) {
      for (Variant v : cfg.variants) {
        if (v == Variant::kLsGb || v == Variant::kFgls) {
          std::cerr << "note: skipping " << variant_label(v)
                    << " (OLS first step infeasible with q + 1 > n)\n";
        }
      }
    }
    const MetricsTable table = run_study(
        cfg, [](const std::string& msg) { std::cerr << msg << "\n"; });
    csv += metrics_to_csv(table, false);
    summary.push_back(json::parse(metrics_to_json(table)));
    if (!emit_dir.empty()) emit_replication_data(cfg, emit_dir);
  }
  write_file(out_dir + "/metrics.csv", csv);
  write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
  manifest.write(out_dir + "/manifest.json");
  std::cout << "wrote " << out_dir << "/metrics.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feasible gradient boosting for spatial regression models"};
  app.require_subcommand(1);

  // weights
  auto* weights = app.add_subcommand("weights", "build a spatial weight matrix");
  std::string w_mode, w_coords, w_out = "weights.csv";
  int w_n = 0, w_k = 1;
  bool w_normalize = false;
  weights->add_option("--mode", w_mode, "circular or knn")->required();
  weights->add_option("--n", w_n, "number of locations (circular)");
  weights->add_option("--k", w_k, "neighbors per side (circular) or count (knn)");
  weights->add_option("--coords", w_coords, "coordinates CSV (knn)");
  weights->add_flag("--normalize", w_normalize, "row-normalize the result");
  weights->add_option("--out", w_out, "output triplet CSV");

  // fit
  auto* fit = app.add_subcommand("fit", "fit a spatial regression model");
  std::string f_data, f_response, f_weights, f_variant, f_out = "fit_out";
  bool f_lags = false, f_standardize = false;
  FitConfig f_cfg;
  f_cfg.seed = 1;
  fit->add_option("--data", f_data)->required();
  fit->add_option("--response", f_response)->required();
  fit->add_option("--weights", f_weights)->required();
  fit->add_option("--variant", f_variant, "ls-gb|gb-gb|ds-gb|ds-ds|fgls")->required();
  fit->add_flag("--lags", f_lags, "append W.<name> spatial lag columns");
  fit->add_flag("--standardize", f_standardize, "center and scale covariates");
  fit->add_option("--step", f_cfg.learning_rate);
  fit->add_option("--mmax", f_cfg.m_max);
  fit->add_option("--folds", f_cfg.folds);
  fit->add_option("--tau", f_cfg.tau);
  fit->add_option("--seed", f_cfg.seed);
  fit->add_option("--out", f_out, "output directory");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "predict from a stored fit");
  std::string p_model, p_data, p_weights, p_out = "predictions.csv";
  predict_cmd->add_option("--model", p_model)->required();
  predict_cmd->add_option("--data", p_data)->required();
  predict_cmd->add_option("--weights", p_weights);
  predict_cmd->add_option("--out", p_out);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "run a simulation study");
  std::string s_scenario, s_klist, s_emit, s_out = "sim_out";
  int s_nsim = 0, s_q = 0;
  double s_lambda = 0.0;
  long long s_seed = -1;
  bool s_has_lambda = false;
  simulate->add_option("--scenario", s_scenario, "scenario config JSON");
  simulate->add_option("--nsim", s_nsim);
  simulate->add_option("--lambda", s_lambda)->each([&](const std::string&) {
    s_has_lambda = true;
  });
  simulate->add_option("--q", s_q);
  simulate->add_option("--k", s_klist, "comma-separated K values");
  simulate->add_option("--seed", s_seed);
  simulate->add_option("--emit-data", s_emit, "dump one replication's CSVs");
  simulate->add_option("--out", s_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (weights->parsed()) {
      return cmd_weights(w_mode, w_n, w_k, w_coords, w_normalize, w_out);
    }
    if (fit->parsed()) {
      return cmd_fit(f_data, f_response, f_weights, f_variant, f_lags,
                     f_standardize, f_cfg, f_out);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(p_model, p_data, p_weights, p_out);
    }
    if (simulate->parsed()) {
      return cmd_simulate(s_scenario, s_nsim, s_lambda, s_has_lambda, s_q,
                          s_klist, s_seed, s_emit, s_out);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const EstimationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
