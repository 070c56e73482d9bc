#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/program_options/options_description.hpp>
#include <boost/program_options/parsers.hpp>

namespace rieszdml::cli {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::optional<double> parse_number(const std::string& text) {
  const std::string t = trim(text);
  const std::string l = lower(t);
  if (l == "inf" || l == "+inf" || l == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (ec != std::errc() || ptr != end || t.empty()) return std::nullopt;
  return v;
}

namespace {

std::vector<std::string> split_numbers(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

LambdaSpec read_lambda(KeyValues& kv, const std::string& prefix, const LambdaSpec& base) {
  LambdaSpec s;
  s.rule = kv.get_string(prefix + "rule", base.rule);
  require(s.rule == "gaussian_quantile" || s.rule == "fixed", prefix + "rule",
          "must be gaussian_quantile or fixed");
  s.c = kv.get_double(prefix + "c", base.c);
  require(std::isfinite(s.c) && s.c >= 0.0, prefix + "c", "must be finite and >= 0");
  s.alpha = kv.get_double(prefix + "alpha", base.alpha);
  require(s.alpha > 0.0 && s.alpha < 1.0, prefix + "alpha", "must lie in (0, 1)");
  s.value = kv.get_double(prefix + "value", base.value);
  require(std::isfinite(s.value) && s.value >= 0.0, prefix + "value", "must be finite and >= 0");
  return s;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd padded(const std::vector<double>& v, std::size_t size, const std::string& key) {
  require(v.size() <= size, key, "has " + std::to_string(v.size()) + " entries, expected at most " +
                                     std::to_string(size));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

CovariateLaw covariate_law(const std::string& name) {
  if (name == "normal") return CovariateLaw::standard_normal;
  if (name == "uniform") return CovariateLaw::uniform;
  throw ConfigError("dgp.x_dist", "must be normal or uniform");
}

}  // namespace

KeyValues KeyValues::parse(std::istream& in) {
  namespace po = boost::program_options;
  po::options_description none;
  po::parsed_options parsed(&none);
  try {
    parsed = po::parse_config_file(in, none, /*allow_unregistered=*/true);
  } catch (const po::error& e) {
    throw ConfigError("config", e.what());
  }
  KeyValues kv;
  for (const auto& opt : parsed.options) {
    const std::string value = opt.value.empty() ? std::string() : trim(opt.value.front());
    if (!kv.values_.emplace(opt.string_key, value).second) {
      throw ConfigError(opt.string_key, "given more than once");
    }
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path.string() + "'");
  return parse(in);
}

std::optional<std::string> KeyValues::raw(const std::string& key) {
  used_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::optional<std::string>& fallback) {
  const auto v = raw(key);
  if (v && !v->empty()) return *v;
  if (fallback) return *fallback;
  throw ConfigError(key, "is required");
}

double KeyValues::get_double(const std::string& key, std::optional<double> fallback) {
  const auto v = raw(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(key, "is required");
  }
  const auto d = parse_number(*v);
  if (!d || std::isnan(*d)) throw ConfigError(key, "expected a number, got '" + *v + "'");
  return *d;
}

std::size_t KeyValues::get_size(const std::string& key, std::optional<std::size_t> fallback) {
  const auto v = get_u64(key, fallback);
  return static_cast<std::size_t>(v);
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::optional<std::uint64_t> fallback) {
  const auto v = raw(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(key, "is required");
  }
  std::uint64_t out = 0;
  const char* end = v->data() + v->size();
  const auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end || v->empty()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + *v + "'");
  }
  return out;
}

bool KeyValues::get_bool(const std::string& key, std::optional<bool> fallback) {
  const auto v = raw(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(key, "is required");
  }
  const std::string l = lower(*v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + *v + "'");
}

std::vector<double> KeyValues::get_vector(const std::string& key, std::optional<std::vector<double>> fallback) {
  const auto v = raw(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(key, "is required");
  }
  std::vector<double> out;
  for (const auto& tok : split_numbers(*v)) {
    const auto d = parse_number(tok);
    if (!d || !std::isfinite(*d)) throw ConfigError(key, "expected finite numbers, got '" + tok + "'");
    out.push_back(*d);
  }
  return out;
}

std::vector<std::vector<double>> KeyValues::get_matrix(const std::string& key) {
  const auto v = raw(key);
  if (!v) throw ConfigError(key, "is required");
  std::vector<std::vector<double>> rows;
  std::istringstream in(*v);
  for (std::string row; std::getline(in, row, ';');) {
    std::vector<double> r;
    for (const auto& tok : split_numbers(row)) {
      const auto d = parse_number(tok);
      if (!d || !std::isfinite(*d)) throw ConfigError(key, "expected finite numbers, got '" + tok + "'");
      r.push_back(*d);
    }
    if (!r.empty()) rows.push_back(std::move(r));
  }
  require(!rows.empty(), key, "is empty");
  for (const auto& r : rows) require(r.size() == rows.front().size(), key, "rows have different lengths");
  return rows;
}

void KeyValues::reject_unused() const {
  for (const auto& [key, value] : values_) {
    if (!used_.count(key)) throw ConfigError(key, "unknown key");
  }
}

Config parse_config(KeyValues& kv, Command command) {
  Config c;
  if (command == Command::estimate) {
    c.data_path = kv.get_string("data.path", std::string());
    c.outcome = kv.get_string("data.outcome");
    c.treatment = kv.get_string("data.treatment", std::string());
    c.standardize = kv.get_bool("data.standardize", false);
  }

  c.dictionary.kind = kv.get_string("dictionary.kind", std::string("polynomial"));
  require(c.dictionary.kind == "polynomial" || c.dictionary.kind == "fourier" || c.dictionary.kind == "identity",
          "dictionary.kind", "must be polynomial, fourier or identity");
  c.dictionary.degree = static_cast<int>(kv.get_size("dictionary.degree", 1));
  require(c.dictionary.degree >= 1, "dictionary.degree", "must be >= 1");
  c.dictionary.interactions = kv.get_bool("dictionary.interactions", false);
  c.dictionary.order = static_cast<int>(kv.get_size("dictionary.order", 1));
  require(c.dictionary.order >= 1, "dictionary.order", "must be >= 1");
  c.dictionary.treatment_interacted = kv.get_bool("dictionary.treatment_interacted", false);

  c.functional.type = kv.get_string("functional.type");
  if (c.functional.type == "average_derivative") {
    c.functional.direction = kv.get_vector("functional.direction");
  } else if (c.functional.type == "policy_shift") {
    c.functional.transport_s = kv.get_matrix("functional.transport_S");
    c.functional.transport_c = kv.get_vector("functional.transport_c");
  } else if (c.functional.type == "ate") {
    if (command == Command::estimate) {
      c.functional.treatment_col = kv.get_string("functional.treatment_col", c.treatment);
      require(!c.functional.treatment_col.empty(), "functional.treatment_col",
              "is required for the ate functional (or set data.treatment)");
    }
  } else {
    throw ConfigError("functional.type", "must be average_derivative, policy_shift or ate");
  }

  c.folds = kv.get_size("dml.folds", 5);
  require(c.folds >= 2, "dml.folds", "must be >= 2");
  c.alpha = kv.get_double("dml.alpha", 0.05);
  require(c.alpha > 0.0 && c.alpha < 1.0, "dml.alpha", "must lie in (0, 1)");
  c.riesz_correction = kv.get_bool("dml.riesz_correction", true);

  const LambdaSpec shared = read_lambda(kv, "lambda.", LambdaSpec{});
  c.lambda_blp = read_lambda(kv, "lambda.blp.", shared);
  c.lambda_riesz = read_lambda(kv, "lambda.riesz.", shared);

  c.l1_bound = kv.get_double("rmd.l1_bound", kNoL1Bound);
  require(c.l1_bound > 0.0, "rmd.l1_bound", "must be > 0 (inf drops the constraint)");
  c.max_iters = kv.get_size("rmd.max_iters", 100000);
  require(c.max_iters >= 1, "rmd.max_iters", "must be >= 1");
  c.pivot_rule = kv.get_string("rmd.pivot_rule", std::string("bland"));
  require(c.pivot_rule == "bland" || c.pivot_rule == "dantzig", "rmd.pivot_rule", "must be bland or dantzig");
  c.seed = kv.get_u64("seed", 0);

  if (command == Command::simulate) {
    DgpSpec d;
    d.kind = kv.get_string("dgp.kind");
    if (d.kind == "sparse_linear") {
      d.dim = kv.get_size("dgp.dim");
      d.beta_star = kv.get_vector("dgp.beta_star");
      d.x_dist = kv.get_string("dgp.x_dist", std::string("normal"));
      covariate_law(d.x_dist);
    } else if (d.kind == "ate_logistic") {
      d.dim = kv.get_size("dgp.dim");
      d.outcome_coefs = kv.get_vector("dgp.outcome_coefs");
      d.tau = kv.get_double("dgp.tau", 1.0);
      require(std::isfinite(d.tau), "dgp.tau", "must be finite");
      d.propensity_coefs = kv.get_vector("dgp.propensity_coefs");
      d.propensity_intercept = kv.get_double("dgp.propensity_intercept", 0.0);
      require(std::isfinite(d.propensity_intercept), "dgp.propensity_intercept", "must be finite");
    } else if (d.kind == "dense_decay") {
      d.dim = kv.get_size("dgp.dim");
      d.decay_rate = kv.get_double("dgp.decay_rate", 1.0);
      require(std::isfinite(d.decay_rate) && d.decay_rate >= 0.0, "dgp.decay_rate", "must be finite and >= 0");
      d.scale = kv.get_double("dgp.scale", 1.0);
      require(std::isfinite(d.scale), "dgp.scale", "must be finite");
      d.x_dist = kv.get_string("dgp.x_dist", std::string("normal"));
      covariate_law(d.x_dist);
    } else {
      throw ConfigError("dgp.kind", "must be sparse_linear, ate_logistic or dense_decay");
    }
    require(d.dim >= 1, "dgp.dim", "must be >= 1");
    d.noise_sd = kv.get_double("dgp.noise_sd", 1.0);
    require(std::isfinite(d.noise_sd) && d.noise_sd >= 0.0, "dgp.noise_sd", "must be finite and >= 0");
    c.dgp = d;
    c.replications = kv.get_size("sim.replications", 100);
    require(c.replications >= 1, "sim.replications", "must be >= 1");
    c.n = kv.get_size("sim.n", 500);
    require(c.n >= 2 * c.folds, "sim.n", "must be at least 2 * dml.folds");
  }

  c.output_json = kv.get_string("output.json", std::string());
  c.output_csv = kv.get_string("output.csv", std::string());
  kv.reject_unused();
  return c;
}

Config load_config(const std::filesystem::path& path, Command command) {
  KeyValues kv = KeyValues::load(path);
  return parse_config(kv, command);
}

nlohmann::ordered_json to_json(const Config& c) {
  using nlohmann::ordered_json;
  auto lambda_json = [](const LambdaSpec& s) {
    ordered_json j;
    j["rule"] = s.rule;
    if (s.rule == "fixed") {
      j["value"] = s.value;
    } else {
      j["c"] = s.c;
      j["alpha"] = s.alpha;
    }
    return j;
  };
  ordered_json j;
  if (!c.outcome.empty()) {
    j["data"] = {{"path", c.data_path}, {"outcome", c.outcome}, {"treatment", c.treatment},
                 {"standardize", c.standardize}};
  }
  j["dictionary"] = {{"kind", c.dictionary.kind},
                     {"degree", c.dictionary.degree},
                     {"interactions", c.dictionary.interactions},
                     {"order", c.dictionary.order},
                     {"treatment_interacted", c.dictionary.treatment_interacted}};
  ordered_json f;
  f["type"] = c.functional.type;
  if (c.functional.type == "average_derivative") f["direction"] = c.functional.direction;
  if (c.functional.type == "policy_shift") {
    f["transport_S"] = c.functional.transport_s;
    f["transport_c"] = c.functional.transport_c;
  }
  if (c.functional.type == "ate" && !c.functional.treatment_col.empty()) {
    f["treatment_col"] = c.functional.treatment_col;
  }
  j["functional"] = f;
  j["dml"] = {{"folds", c.folds}, {"alpha", c.alpha}, {"riesz_correction", c.riesz_correction}};
  j["lambda"] = {{"blp", lambda_json(c.lambda_blp)}, {"riesz", lambda_json(c.lambda_riesz)}};
  j["rmd"] = {{"l1_bound", c.l1_bound}, {"max_iters", c.max_iters}, {"pivot_rule", c.pivot_rule}};
  j["seed"] = c.seed;
  if (c.dgp) {
    const DgpSpec& d = *c.dgp;
    ordered_json g;
    g["kind"] = d.kind;
    g["dim"] = d.dim;
    if (d.kind == "sparse_linear") {
      g["beta_star"] = d.beta_star;
      g["x_dist"] = d.x_dist;
    } else if (d.kind == "ate_logistic") {
      g["outcome_coefs"] = d.outcome_coefs;
      g["tau"] = d.tau;
      g["propensity_coefs"] = d.propensity_coefs;
      g["propensity_intercept"] = d.propensity_intercept;
    } else {
      g["decay_rate"] = d.decay_rate;
      g["scale"] = d.scale;
      g["x_dist"] = d.x_dist;
    }
    g["noise_sd"] = d.noise_sd;
    j["dgp"] = g;
    j["sim"] = {{"replications", c.replications}, {"n", c.n}};
  }
  j["output"] = {{"json", c.output_json}, {"csv", c.output_csv}};
  return j;
}

Dictionary build_dictionary(const DictionarySpec& spec, std::size_t input_dim,
                            std::optional<std::size_t> treatment_index) {
  const bool interacted = spec.treatment_interacted;
  if (interacted && !treatment_index) {
    throw ConfigError("dictionary.treatment_interacted", "needs a treatment column");
  }
  const std::size_t inner_dim = interacted ? input_dim - 1 : input_dim;
  if (inner_dim == 0) throw ConfigError("dictionary.kind", "no covariates left for the dictionary");
  Dictionary inner = spec.kind == "polynomial" ? Dictionary::polynomial(inner_dim, spec.degree, spec.interactions)
                     : spec.kind == "fourier"  ? Dictionary::fourier(inner_dim, spec.order)
                                               : Dictionary::identity(inner_dim);
  if (!interacted) return inner;
  return Dictionary::treatment_interacted(std::move(inner), *treatment_index);
}

namespace {

Functional build_functional(const FunctionalSpec& spec, std::size_t dim, std::optional<std::size_t> treatment) {
  if (spec.type == "average_derivative") {
    return Functional::average_derivative(padded(spec.direction, dim, "functional.direction"));
  }
  if (spec.type == "policy_shift") {
    require(spec.transport_s.size() == dim && spec.transport_s.front().size() == dim, "functional.transport_S",
            "must be " + std::to_string(dim) + " x " + std::to_string(dim));
    require(spec.transport_c.size() == dim, "functional.transport_c",
            "has " + std::to_string(spec.transport_c.size()) + " entries, expected " + std::to_string(dim));
    Eigen::MatrixXd s(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t k = 0; k < dim; ++k)
        s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = spec.transport_s[i][k];
    return Functional::policy_shift(std::move(s), to_eigen(spec.transport_c));
  }
  require(treatment.has_value(), "functional.treatment_col", "no treatment column is available");
  return Functional::average_treatment_effect(*treatment);
}

}  // namespace

Functional build_functional(const FunctionalSpec& spec, const Dataset& data) {
  std::optional<std::size_t> treatment;
  if (spec.type == "ate") {
    const auto& names = data.covariate_names();
    const auto it = std::find(names.begin(), names.end(), spec.treatment_col);
    require(it != names.end(), "functional.treatment_col", "no covariate named '" + spec.treatment_col + "'");
    treatment = static_cast<std::size_t>(it - names.begin());
  }
  return build_functional(spec, data.dim(), treatment);
}

Functional build_functional(const FunctionalSpec& spec, const Dgp& dgp) {
  return build_functional(spec, dgp.covariate_dim(), dgp.treatment_col());
}

LambdaRule build_lambda_rule(const LambdaSpec& spec) {
  if (spec.rule == "fixed") return LambdaRule::fixed(spec.value);
  return LambdaRule::gaussian_quantile(spec.c, spec.alpha);
}

DmlOptions build_dml_options(const Config& c) {
  DmlOptions o;
  o.folds = c.folds;
  o.alpha = c.alpha;
  o.blp_rule = build_lambda_rule(c.lambda_blp);
  o.riesz_rule = build_lambda_rule(c.lambda_riesz);
  o.l1_bound = c.l1_bound;
  o.solver.max_iters = c.max_iters;
  o.solver.pivot_rule = c.pivot_rule == "dantzig" ? lp::PivotRule::dantzig : lp::PivotRule::bland;
  o.seed = c.seed;
  o.riesz_correction = c.riesz_correction;
  return o;
}

Dgp build_dgp(const Config& c) {
  const DgpSpec& d = c.dgp.value();
  if (d.kind == "ate_logistic") {
    return Dgp(AteLogisticDgp{padded(d.outcome_coefs, d.dim, "dgp.outcome_coefs"), d.tau,
                              padded(d.propensity_coefs, d.dim, "dgp.propensity_coefs"), d.noise_sd,
                              d.propensity_intercept});
  }
  Dictionary dict = build_dictionary(c.dictionary, d.dim, std::nullopt);
  if (d.kind == "sparse_linear") {
    return Dgp(SparseLinearDgp{dict, padded(d.beta_star, dict.output_dim(), "dgp.beta_star"),
                               covariate_law(d.x_dist), d.noise_sd});
  }
  return Dgp(DenseDecayDgp{dict, d.decay_rate, d.noise_sd, covariate_law(d.x_dist), d.scale});
}

}  // namespace rieszdml::cli
