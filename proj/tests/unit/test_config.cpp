#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "config.hpp"

using namespace rieszdml;
using namespace rieszdml::cli;

namespace {

KeyValues kv_of(const std::string& text) {
  std::istringstream in(text);
  return KeyValues::parse(in);
}

Config parse(const std::string& text, Command command) {
  KeyValues kv = kv_of(text);
  return parse_config(kv, command);
}

std::string config_error_key(const std::string& text, Command command) {
  try {
    parse(text, command);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

const char* kEstimateBase =
    "data.outcome = y\n"
    "functional.type = average_derivative\n"
    "functional.direction = 1\n";

const char* kSimulateBase =
    "functional.type = average_derivative\n"
    "functional.direction = 1\n"
    "dgp.kind = sparse_linear\n"
    "dgp.dim = 3\n"
    "dgp.beta_star = 0 1 0.5\n";

}  // namespace

TEST(ParseNumber, AcceptsDecimalsAndInfinity) {
  EXPECT_EQ(parse_number("1.5"), 1.5);
  EXPECT_EQ(parse_number(" -2e-3 "), -2e-3);
  EXPECT_TRUE(std::isinf(*parse_number("inf")));
  EXPECT_TRUE(std::isinf(*parse_number("Infinity")));
  EXPECT_FALSE(parse_number("1.5x"));
  EXPECT_FALSE(parse_number(""));
  EXPECT_FALSE(parse_number("abc"));
}

TEST(KeyValues, CommentsSectionsAndLookup) {
  KeyValues kv = kv_of(
      "# comment\n"
      "seed = 7   # trailing comment\n"
      "[dml]\n"
      "folds = 3\n"
      "[functional]\n"
      "direction = 1, 0.5  2\n"
      "transport_S = 1 0; 0 1\n");
  EXPECT_EQ(kv.get_u64("seed"), 7u);
  EXPECT_EQ(kv.get_size("dml.folds"), 3u);
  EXPECT_EQ(kv.get_vector("functional.direction"), (std::vector<double>{1.0, 0.5, 2.0}));
  EXPECT_EQ(kv.get_matrix("functional.transport_S"), (std::vector<std::vector<double>>{{1, 0}, {0, 1}}));
  EXPECT_NO_THROW(kv.reject_unused());
}

TEST(KeyValues, Errors) {
  EXPECT_THROW(kv_of("seed = 1\nseed = 2\n"), ConfigError);
  KeyValues kv = kv_of("a = x\nb = 1;2 3\nc = maybe\nd = -1\n");
  EXPECT_THROW(kv.get_double("a"), ConfigError);
  EXPECT_THROW(kv.get_matrix("b"), ConfigError);
  EXPECT_THROW(kv.get_bool("c"), ConfigError);
  EXPECT_THROW(kv.get_u64("d"), ConfigError);
  EXPECT_THROW(kv.get_double("missing"), ConfigError);
  EXPECT_EQ(kv.get_double("missing", 2.5), 2.5);
}

TEST(KeyValues, UnknownKeyIsNamed) {
  KeyValues kv = kv_of("seed = 1\nsede = 2\n");
  kv.get_u64("seed");
  try {
    kv.reject_unused();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "sede");
  }
}

TEST(ParseConfig, Defaults) {
  const Config c = parse(kEstimateBase, Command::estimate);
  EXPECT_EQ(c.outcome, "y");
  EXPECT_EQ(c.folds, 5u);
  EXPECT_EQ(c.alpha, 0.05);
  EXPECT_EQ(c.dictionary.kind, "polynomial");
  EXPECT_EQ(c.dictionary.degree, 1);
  EXPECT_EQ(c.lambda_blp.rule, "gaussian_quantile");
  EXPECT_EQ(c.lambda_blp.c, 1.1);
  EXPECT_EQ(c.lambda_riesz.alpha, 0.05);
  EXPECT_TRUE(std::isinf(c.l1_bound));
  EXPECT_EQ(c.pivot_rule, "bland");
  EXPECT_TRUE(c.riesz_correction);
  EXPECT_FALSE(c.dgp);
}

TEST(ParseConfig, LambdaOverrides) {
  const Config c = parse(std::string(kEstimateBase) +
                             "lambda.c = 2\n"
                             "lambda.riesz.rule = fixed\n"
                             "lambda.riesz.value = 0.3\n",
                         Command::estimate);
  EXPECT_EQ(c.lambda_blp.c, 2.0);
  EXPECT_EQ(c.lambda_riesz.rule, "fixed");
  EXPECT_EQ(c.lambda_riesz.value, 0.3);
  EXPECT_DOUBLE_EQ(build_lambda_rule(c.lambda_riesz).value(10, 100), 0.3);
}

TEST(ParseConfig, ErrorsNameTheKey) {
  const std::string e = kEstimateBase;
  EXPECT_EQ(config_error_key("functional.type = ate\n", Command::estimate), "data.outcome");
  EXPECT_EQ(config_error_key(e + "dml.folds = 1\n", Command::estimate), "dml.folds");
  EXPECT_EQ(config_error_key(e + "dml.alpha = 1.5\n", Command::estimate), "dml.alpha");
  EXPECT_EQ(config_error_key(e + "dictionary.kind = spline\n", Command::estimate), "dictionary.kind");
  EXPECT_EQ(config_error_key(e + "dictionary.degree = 0\n", Command::estimate), "dictionary.degree");
  EXPECT_EQ(config_error_key(e + "lambda.rule = magic\n", Command::estimate), "lambda.rule");
  EXPECT_EQ(config_error_key(e + "lambda.blp.alpha = 0\n", Command::estimate), "lambda.blp.alpha");
  EXPECT_EQ(config_error_key(e + "rmd.l1_bound = 0\n", Command::estimate), "rmd.l1_bound");
  EXPECT_EQ(config_error_key(e + "rmd.pivot_rule = steepest\n", Command::estimate), "rmd.pivot_rule");
  EXPECT_EQ(config_error_key(e + "unknown.key = 1\n", Command::estimate), "unknown.key");
  EXPECT_EQ(config_error_key("data.outcome = y\nfunctional.type = ate\n", Command::estimate),
            "functional.treatment_col");
  EXPECT_EQ(config_error_key("data.outcome = y\nfunctional.type = mean\n", Command::estimate), "functional.type");
  // Keys of the other command are unknown.
  EXPECT_EQ(config_error_key(e + "dgp.kind = sparse_linear\n", Command::estimate), "dgp.kind");
  EXPECT_EQ(config_error_key(std::string(kSimulateBase) + "data.outcome = y\n", Command::simulate), "data.outcome");
}

TEST(ParseConfig, SimulateErrorsNameTheKey) {
  const std::string s = kSimulateBase;
  EXPECT_EQ(config_error_key(s + "dgp.noise_sd = -1\n", Command::simulate), "dgp.noise_sd");
  EXPECT_EQ(config_error_key(s + "dgp.x_dist = cauchy\n", Command::simulate), "dgp.x_dist");
  EXPECT_EQ(config_error_key(s + "sim.n = 9\n", Command::simulate), "sim.n");
  EXPECT_EQ(config_error_key(s + "sim.replications = 0\n", Command::simulate), "sim.replications");
  EXPECT_EQ(config_error_key("functional.type = ate\ndgp.kind = probit\n", Command::simulate), "dgp.kind");
}

TEST(ParseConfig, SimulateBuildsObjects) {
  const Config c = parse(std::string(kSimulateBase) + "sim.n = 100\nsim.replications = 3\n", Command::simulate);
  ASSERT_TRUE(c.dgp);
  const Dgp dgp = build_dgp(c);
  EXPECT_EQ(dgp.covariate_dim(), 3u);
  // beta_star is zero-padded to the dictionary length.
  EXPECT_EQ(dgp_coefficients(dgp), (Eigen::VectorXd(4) << 0, 1, 0.5, 0).finished());
  const Dictionary dict = build_dictionary(c.dictionary, dgp.covariate_dim(), dgp.treatment_col());
  EXPECT_EQ(dict.output_dim(), 4u);
  const Functional f = build_functional(c.functional, dgp);
  EXPECT_NO_THROW(f.check_compatible(dict));
  EXPECT_EQ(c.n, 100u);
  EXPECT_EQ(c.replications, 3u);
}

TEST(ParseConfig, DirectionTooLong) {
  const Config c = parse(
      "functional.type = average_derivative\nfunctional.direction = 1 0 0 0\n"
      "dgp.kind = sparse_linear\ndgp.dim = 2\ndgp.beta_star = 0 1\n",
      Command::simulate);
  try {
    build_functional(c.functional, build_dgp(c));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "functional.direction");
  }
}
