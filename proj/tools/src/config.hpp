#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rieszdml/dataset.hpp"
#include "rieszdml/dictionary.hpp"
#include "rieszdml/dml.hpp"
#include "rieszdml/error.hpp"
#include "rieszdml/functional.hpp"
#include "rieszdml/simulation.hpp"

namespace rieszdml::cli {

/// A configuration problem attributable to a single key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// A complete decimal number, or "inf" for +infinity.
std::optional<double> parse_number(const std::string& text);

/// Raw `key = value` pairs. Every lookup marks the key as used so leftovers
/// can be reported as unknown.
class KeyValues {
 public:
  static KeyValues parse(std::istream& in);
  static KeyValues load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> raw(const std::string& key);

  std::string get_string(const std::string& key, const std::optional<std::string>& fallback = std::nullopt);
  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt);
  std::size_t get_size(const std::string& key, std::optional<std::size_t> fallback = std::nullopt);
  std::uint64_t get_u64(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt);
  bool get_bool(const std::string& key, std::optional<bool> fallback = std::nullopt);
  /// Numbers separated by whitespace or commas.
  std::vector<double> get_vector(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt);
  /// Rows separated by ';', entries as in get_vector.
  std::vector<std::vector<double>> get_matrix(const std::string& key);

  /// Throws ConfigError for the first key that was never looked up.
  void reject_unused() const;

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> used_;
};

struct DictionarySpec {
  std::string kind = "polynomial";
  int degree = 1;
  bool interactions = false;
  int order = 1;
  bool treatment_interacted = false;
};

struct FunctionalSpec {
  std::string type;
  /// Zero-padded to the covariate dimension.
  std::vector<double> direction;
  std::vector<std::vector<double>> transport_s;
  std::vector<double> transport_c;
  std::string treatment_col;
};

struct LambdaSpec {
  std::string rule = "gaussian_quantile";
  double c = 1.1;
  double alpha = 0.05;
  double value = 0.0;
};

struct DgpSpec {
  std::string kind;
  std::size_t dim = 0;
  std::vector<double> beta_star;
  std::string x_dist = "normal";
  double noise_sd = 1.0;
  std::vector<double> outcome_coefs;
  double tau = 1.0;
  std::vector<double> propensity_coefs;
  double propensity_intercept = 0.0;
  double decay_rate = 1.0;
  double scale = 1.0;
};

struct Config {
  std::string data_path;
  std::string outcome;
  std::string treatment;
  bool standardize = false;

  DictionarySpec dictionary;
  FunctionalSpec functional;

  std::size_t folds = 5;
  double alpha = 0.05;
  /// false fixes the Riesz representer at zero (plug-in baseline).
  bool riesz_correction = true;
  LambdaSpec lambda_blp;
  LambdaSpec lambda_riesz;
  double l1_bound = kNoL1Bound;
  std::size_t max_iters = 100000;
  std::string pivot_rule = "bland";
  std::uint64_t seed = 0;

  std::optional<DgpSpec> dgp;
  std::size_t replications = 100;
  std::size_t n = 500;

  std::string output_json;
  std::string output_csv;
};

enum class Command { estimate, simulate };

/// Reads every key the command understands, validates ranges and rejects
/// unknown keys. Errors name the offending key.
Config parse_config(KeyValues& kv, Command command);
Config load_config(const std::filesystem::path& path, Command command);

nlohmann::ordered_json to_json(const Config& config);

Dictionary build_dictionary(const DictionarySpec& spec, std::size_t input_dim,
                            std::optional<std::size_t> treatment_index);
Functional build_functional(const FunctionalSpec& spec, const Dataset& data);
Functional build_functional(const FunctionalSpec& spec, const Dgp& dgp);
LambdaRule build_lambda_rule(const LambdaSpec& spec);
DmlOptions build_dml_options(const Config& config);
Dgp build_dgp(const Config& config);

}  // namespace rieszdml::cli
