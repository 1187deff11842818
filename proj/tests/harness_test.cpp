#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cltr/harness.hpp"

namespace cltr {
namespace {

namespace fs = std::filesystem;

ExperimentConfig tiny() {
  ExperimentConfig c;
  c.n_queries = 60;
  c.docs_per_query = 6;
  c.feature_dim = 4;
  c.budgets = {300};
  c.estimators = {Estimator::kNaive};
  c.architecture = Architecture::mlp({4});
  c.epochs = 2;
  c.production_queries = 5;
  c.seeds = {7};
  return c;
}

TEST(Config, TextRoundTrip) {
  auto c = tiny();
  c.eta = 2.0;
  c.eps_minus_1 = 0.35;
  c.clip = 10.0;
  c.bias_mode = BiasMode::kEstimated;
  c.heads = {Head::kSigmoid, Head::kSoftmax};
  c.budget_unit = BudgetUnit::kSessions;
  c.estimators = {Estimator::kAffine, Estimator::kBayesIps};
  const auto path = fs::temp_directory_path() / "cltr_config_roundtrip.ini";
  std::ofstream(path) << c.to_text();
  const auto back = ExperimentConfig::load(path);
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.heads, c.heads);
  EXPECT_EQ(back.clip, c.clip);
  fs::remove(path);
}

TEST(Config, UnknownKeyAndBadValues) {
  ExperimentConfig c;
  EXPECT_THROW(c.set("learning_rat", "0.1"), std::invalid_argument);
  EXPECT_THROW(c.set("eta", "fast"), std::invalid_argument);
  EXPECT_THROW(c.set("budgets", "10,x"), std::invalid_argument);
  EXPECT_THROW(c.set("bias_mode", "guess"), std::invalid_argument);
  c.set("budgets", "5, 50");
  EXPECT_EQ(c.budgets, (std::vector<std::int64_t>{5, 50}));
}

TEST(Config, Validate) {
  EXPECT_NO_THROW(tiny().validate());
  auto c = tiny();
  c.budgets.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny();
  c.estimators.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny();
  c.seeds.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny();
  c.bias_mode = BiasMode::kEstimated;
  c.heads.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = tiny();
  c.budgets = {0};
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Config, ParseErrorsCarryLineNumbers) {
  std::istringstream good("# comment\ntop = 1\n[bias]\neta = 2 # trailing\n");
  const auto sections = parse_config(good);
  EXPECT_EQ(sections.at("").at("top"), "1");
  EXPECT_EQ(sections.at("bias").at("eta"), "2");

  std::istringstream bad("[bias]\neta = 1\nnonsense\n");
  try {
    parse_config(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream header("[bias\n");
  EXPECT_THROW(parse_config(header), ParseError);
}

TEST(Sweep, RowCount) {
  const auto rows = run_sweep(tiny());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].estimator, "production");
  EXPECT_EQ(rows[1].estimator, "full-info");
  EXPECT_EQ(rows[2].estimator, "naive");
  for (const auto& r : rows) {
    EXPECT_EQ(r.status, "ok");
    EXPECT_GE(r.ndcg10, 0.0);
    EXPECT_LE(r.ndcg10, 1.0);
  }
  EXPECT_EQ(rows[2].budget, 300);
}

TEST(Sweep, EstimatedModeRowsPerHead) {
  auto c = tiny();
  c.bias_mode = BiasMode::kEstimated;
  c.heads = {Head::kSigmoid, Head::kSoftMinMax};
  c.em_iterations = 1;
  c.m_step_epochs = 1;
  const auto rows = run_sweep(c);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[2].head, "sigmoid");
  EXPECT_EQ(rows[3].head, "soft-min-max");
}

TEST(Sweep, CsvIsDeterministic) {
  auto c = tiny();
  c.estimators = {Estimator::kNaive, Estimator::kAffine};
  c.budgets = {100, 300};
  std::ostringstream a, b;
  run_sweep(c, &a);
  run_sweep(c, &b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_FALSE(a.str().empty());
}

TEST(Sweep, InfeasibleBiasIsRecordedAndSweepContinues) {
  auto c = tiny();
  c.eps_minus_1 = 0.99;
  c.seeds = {1, 2};
  std::ostringstream csv;
  const auto rows = run_sweep(c, &csv);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_EQ(r.status.rfind("error: ", 0), 0u) << r.status;
  EXPECT_EQ(rows[0].seed, 1u);
  EXPECT_EQ(rows[1].seed, 2u);
  EXPECT_NE(csv.str().find("error: "), std::string::npos);
}

TEST(BiasModeNames, RoundTrip) {
  for (auto m : {BiasMode::kOracle, BiasMode::kEstimated}) EXPECT_EQ(parse_bias_mode(to_string(m)), m);
}

}  // namespace
}  // namespace cltr
