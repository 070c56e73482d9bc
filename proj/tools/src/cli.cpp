#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "json_writer.hpp"
#include "rieszdml/csv.hpp"
#include "rieszdml/parallel.hpp"
#include "rieszdml/rmd.hpp"
#include "rieszdml/simulation.hpp"

namespace rieszdml::cli {
namespace {

using nlohmann::ordered_json;

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ordered_json solution_json(const RmdSolution& s) {
  return {{"l1_norm", s.l1_norm},
          {"max_residual", s.max_residual},
          {"status", to_string(s.status)},
          {"iterations", s.iterations}};
}

ordered_json nuisance_json(const NuisanceFit& fit) {
  ordered_json j;
  j["coef"] = vec_json(fit.coef);
  j["lambda"] = fit.lambda;
  j["sample_size"] = fit.sample_size;
  j.update(solution_json(fit.solution));
  return j;
}

// Writes to `path`, or to `fallback` when the path is empty.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  write(file);
  if (!file) throw std::runtime_error("failed writing '" + path + "'");
}

// Library errors raised while assembling a run from configuration are
// attributed to the key that produced the offending object.
template <typename F>
auto keyed(const std::string& key, F&& build) {
  try {
    return build();
  } catch (const ConfigError&) {
    throw;
  } catch (const DimensionError& e) {
    throw ConfigError(key, e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(key, e.what());
  } catch (const IncompatibleError& e) {
    throw ConfigError(key, e.what());
  }
}

Eigen::MatrixXd read_matrix(const std::string& path, const std::string& flag) {
  std::ifstream in(path);
  if (!in) throw ConfigError(flag, "cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(in, line);) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<double> row;
    for (std::string tok; ls >> tok;) {
      const auto v = parse_number(tok);
      if (!v || !std::isfinite(*v)) throw ConfigError(flag, "'" + tok + "' in '" + path + "' is not a finite number");
      row.push_back(*v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(flag, "'" + path + "' holds no numbers");
  const std::size_t cols = rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw ConfigError(flag, "rows of '" + path + "' have different lengths");
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

ordered_json dml_json(const DmlResult& r, const Config& config) {
  ordered_json j;
  j["theta_hat"] = r.theta_hat;
  j["sigma_hat"] = r.sigma_hat;
  j["ci"] = {r.ci_lower, r.ci_upper};
  j["alpha"] = r.alpha;
  j["K"] = r.folds;
  j["n"] = r.n;
  j["status"] = to_string(r.status);
  j["warnings"] = r.warnings;
  j["per_fold_theta"] = r.per_fold_theta;
  ordered_json folds = ordered_json::array();
  for (const auto& f : r.per_fold) {
    folds.push_back({{"fold", f.fold},
                     {"eval_size", f.eval_size},
                     {"theta", f.theta},
                     {"blp", nuisance_json(f.blp)},
                     {"riesz", nuisance_json(f.riesz)}});
  }
  j["per_fold"] = folds;
  j["orthogonality"] = {{"d_beta_sup", r.orthogonality.d_beta_sup},
                        {"d_rho_sup", r.orthogonality.d_rho_sup},
                        {"within_bounds", r.orthogonality.within_bounds}};
  j["lambda_used"] = {{"blp", r.lambda_blp}, {"riesz", r.lambda_riesz}};
  j["config"] = to_json(config);
  return j;
}

int cmd_estimate(const std::string& data_flag, const std::string& config_path, const std::string& out_flag,
                 std::ostream& out) {
  Config config = load_config(config_path, Command::estimate);
  if (!data_flag.empty()) config.data_path = data_flag;
  const std::string data_key = data_flag.empty() ? "data.path" : "--data";
  if (config.data_path.empty()) throw ConfigError(data_key, "no data file (use --data or data.path)");
  if (!std::filesystem::is_regular_file(config.data_path)) {
    throw ConfigError(data_key, "cannot open '" + config.data_path + "'");
  }
  if (!out_flag.empty()) config.output_json = out_flag;

  if (!config.treatment.empty() && config.treatment == config.outcome) {
    throw ConfigError("data.treatment", "must differ from data.outcome");
  }
  CsvColumns columns{config.outcome, std::nullopt};
  if (!config.treatment.empty()) columns.treatment = config.treatment;
  Dataset data = [&] {
    try {
      return read_csv_dataset(std::filesystem::path(config.data_path), columns);
    } catch (const MissingColumnError& e) {
      throw ConfigError(e.column() == config.outcome ? "data.outcome" : "data.treatment", e.what());
    }
  }();
  if (config.standardize) data = data.standardized();

  const Dictionary dict = keyed("dictionary.kind", [&] {
    return build_dictionary(config.dictionary, data.dim(), data.treatment_col());
  });
  const Functional f = keyed("functional.type", [&] {
    Functional fn = build_functional(config.functional, data);
    fn.check_compatible(dict, data);
    return fn;
  });
  if (data.size() < 2 * config.folds) {
    throw ConfigError("dml.folds", "needs at least 2 * folds = " + std::to_string(2 * config.folds) + " rows");
  }
  DmlOptions opts = build_dml_options(config);
  opts.threads = default_thread_count();

  const DmlResult result = dml_estimate(data, dict, f, opts);
  emit(config.output_json, out, [&](std::ostream& os) { write_json(os, dml_json(result, config)); });
  return kExitOk;
}

void write_replications_csv(std::ostream& os, const MonteCarloReport& report) {
  os << "rep,data_seed,fold_seed,ok,theta_hat,sigma_hat,ci_lower,ci_upper,covered,"
        "max_feasibility_excess,d_beta_sup,d_rho_sup,error\n";
  for (const auto& r : report.per_rep) {
    std::string error = r.error;
    std::replace(error.begin(), error.end(), '"', '\'');
    os << r.rep << ',' << r.data_seed << ',' << r.fold_seed << ',' << (r.ok ? 1 : 0) << ','
       << format_double(r.theta_hat) << ',' << format_double(r.sigma_hat) << ',' << format_double(r.ci_lower)
       << ',' << format_double(r.ci_upper) << ',' << (r.covered ? 1 : 0) << ','
       << format_double(r.max_feasibility_excess) << ',' << format_double(r.d_beta_sup) << ','
       << format_double(r.d_rho_sup) << ",\"" << error << "\"\n";
  }
}

int cmd_simulate(const std::string& config_path, const std::string& out_flag, const std::string& csv_flag,
                 std::ostream& out) {
  Config config = load_config(config_path, Command::simulate);
  if (!out_flag.empty()) config.output_json = out_flag;
  if (!csv_flag.empty()) config.output_csv = csv_flag;

  const Dgp dgp = keyed("dgp.kind", [&] { return build_dgp(config); });
  const Dictionary dict = keyed("dictionary.kind", [&] {
    return build_dictionary(config.dictionary, dgp.covariate_dim(), dgp.treatment_col());
  });
  const Functional f = keyed("functional.type", [&] {
    Functional fn = build_functional(config.functional, dgp);
    fn.check_compatible(dict);
    return fn;
  });

  MonteCarloConfig mc{dict, f, build_dml_options(config), config.replications, config.n, config.seed,
                      default_thread_count()};
  const MonteCarloReport report = keyed("functional.type", [&] { return run_monte_carlo(dgp, mc); });

  ordered_json j;
  j["dgp"] = dgp.name();
  j["functional"] = f.name();
  j["dictionary"] = dict.describe();
  j["p"] = dict.output_dim();
  j["replications"] = report.replications;
  j["n"] = report.n;
  j["seed"] = report.seed;
  j["true_theta"] = report.true_theta;
  j["truth_method"] = to_string(report.truth_method);
  j["failures"] = report.failures;
  j["mean_theta"] = report.mean_theta;
  j["bias"] = report.bias;
  j["rmse"] = report.rmse;
  j["coverage"] = report.coverage;
  j["mean_ci_length"] = report.mean_ci_length;
  j["mean_sigma_hat"] = report.mean_sigma_hat;
  j["config"] = to_json(config);
  emit(config.output_json, out, [&](std::ostream& os) { write_json(os, j); });
  if (!config.output_csv.empty()) {
    emit(config.output_csv, out, [&](std::ostream& os) { write_replications_csv(os, report); });
  }
  return kExitOk;
}

int cmd_rmd_solve(const std::string& gram_path, const std::string& moments_path, double lambda,
                  const std::string& l1_bound_text, std::size_t max_iters, const std::string& out_path,
                  std::ostream& out, std::ostream& err) {
  const Eigen::MatrixXd gram = read_matrix(gram_path, "--gram");
  const Eigen::MatrixXd moments = read_matrix(moments_path, "--moments");
  if (moments.rows() != 1 && moments.cols() != 1) throw ConfigError("--moments", "must hold a single vector");
  const Eigen::VectorXd m = moments.reshaped();

  double l1_bound = kNoL1Bound;
  if (!l1_bound_text.empty()) {
    const auto parsed = parse_number(l1_bound_text);
    if (!parsed || !(*parsed > 0.0)) throw ConfigError("--l1-bound", "must be a number > 0 or inf");
    l1_bound = *parsed;
  }
  const RmdProblem problem = keyed("--gram", [&] { return RmdProblem(gram, m, lambda, l1_bound); });
  RmdOptions opts;
  opts.max_iters = max_iters;
  const RmdSolution s = solve_rmd(problem, opts);

  ordered_json j;
  j["t"] = vec_json(s.t);
  j.update(solution_json(s));
  j["lambda"] = lambda;
  j["l1_bound"] = l1_bound;
  j["p"] = problem.dim();
  emit(out_path, out, [&](std::ostream& os) { write_json(os, j); });
  if (s.status != RmdStatus::optimal) {
    err << json_line({{"error", "solver"}, {"status", to_string(s.status)},
                      {"message", std::string("rmd: program is ") + to_string(s.status)}})
        << '\n';
    return kExitSolver;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Debiased estimation of linear functionals with regularized Riesz representers", "rieszdml"};
  app.require_subcommand(1);

  std::string data_path, config_path, out_path, csv_path;
  auto* estimate = app.add_subcommand("estimate", "Cross-fitted debiased estimate from a CSV file");
  estimate->add_option("--data", data_path, "CSV file with a header row");
  estimate->add_option("--config", config_path, "Configuration file")->required();
  estimate->add_option("--out", out_path, "Write the JSON result here instead of stdout");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo experiment");
  simulate->add_option("--config", config_path, "Configuration file")->required();
  simulate->add_option("--out", out_path, "Write the JSON report here instead of stdout");
  simulate->add_option("--csv", csv_path, "Write per-replication rows here");

  std::string gram_path, moments_path, l1_bound_text;
  double lambda = 0.0;
  std::size_t max_iters = 100000;
  auto* rmd = app.add_subcommand("rmd-solve", "Solve one regularized minimum distance program");
  rmd->add_option("--gram", gram_path, "Gram matrix, one row per line")->required();
  rmd->add_option("--moments", moments_path, "Moment vector")->required();
  rmd->add_option("--lambda", lambda, "Sup-norm slack")->required()->check(CLI::NonNegativeNumber);
  rmd->add_option("--l1-bound", l1_bound_text, "l1 bound B (default: none)");
  rmd->add_option("--max-iters", max_iters, "Simplex iteration cap")->check(CLI::PositiveNumber);
  rmd->add_option("--out", out_path, "Write the JSON solution here instead of stdout");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << json_line({{"error", "usage"}, {"message", e.what()}}) << '\n';
    return kExitConfig;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(data_path, config_path, out_path, out);
    if (simulate->parsed()) return cmd_simulate(config_path, out_path, csv_path, out);
    return cmd_rmd_solve(gram_path, moments_path, lambda, l1_bound_text, max_iters, out_path, out, err);
  } catch (const ConfigError& e) {
    err << json_line({{"error", "config"}, {"key", e.key()}, {"message", e.what()}}) << '\n';
    return kExitConfig;
  } catch (const SolverError& e) {
    err << json_line({{"error", "solver"},
                      {"fold", e.fold()},
                      {"infeasible", e.infeasible()},
                      {"message", e.what()}})
        << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << json_line({{"error", "runtime"}, {"message", e.what()}}) << '\n';
    return kExitFailure;
  }
}

}  // namespace rieszdml::cli
