#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cltr/bias_model.hpp"
#include "cltr/config.hpp"

namespace cltr {
namespace {

BiasSchedule constant_eps(int n, double eps_plus, double eps_minus) {
  std::vector<double> theta(n);
  for (int k = 0; k < n; ++k) theta[k] = 1.0 / (k + 1);
  return BiasSchedule(theta, std::vector<double>(n, eps_plus), std::vector<double>(n, eps_minus));
}

BiasSchedule random_schedule(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> theta(n), ep(n), em(n);
  for (int k = 0; k < n; ++k) {
    theta[k] = 0.05 + 0.95 * u(rng);
    em[k] = 0.9 * u(rng);
    ep[k] = em[k] + (1.0 - em[k]) * (0.05 + 0.95 * u(rng));
  }
  return BiasSchedule(theta, ep, em);
}

TEST(StandardSchedule, RankOneAndTwo) {
  const auto s = BiasSchedule::standard(1.0, 0.65, 20);
  EXPECT_DOUBLE_EQ(s.theta(1), 1.0);
  EXPECT_DOUBLE_EQ(s.eps_plus(1), 0.98);
  EXPECT_DOUBLE_EQ(s.eps_minus(1), 0.65);
  EXPECT_NEAR(s.alpha(1), 0.33, 1e-12);
  EXPECT_NEAR(s.beta(1), 0.65, 1e-12);
  EXPECT_NEAR(s.alpha(2), 0.3225, 1e-12);
  EXPECT_NEAR(s.beta(2), 0.1625, 1e-12);
  EXPECT_DOUBLE_EQ(BiasSchedule::standard(2.0, 0.65, 5).theta(2), 0.25);
}

TEST(StandardSchedule, Plateaus) {
  const auto s = BiasSchedule::standard(1.0, 0.35, 30);
  EXPECT_DOUBLE_EQ(s.eps_minus(10), 0.035);
  EXPECT_DOUBLE_EQ(s.eps_minus(25), 0.035);
  EXPECT_DOUBLE_EQ(s.theta(20), s.theta(30));
  EXPECT_DOUBLE_EQ(s.eps_plus(21), 0.79);
  for (int k = 1; k <= s.max_rank(); ++k) EXPECT_NEAR(s.alpha(k) + s.beta(k), s.theta(k) * s.eps_plus(k), 1e-15);
}

TEST(StandardSchedule, RejectsBadParameters) {
  EXPECT_THROW(BiasSchedule::standard(-1.0, 0.65, 5), std::invalid_argument);
  EXPECT_THROW(BiasSchedule::standard(1.0, 0.0, 5), std::invalid_argument);
  EXPECT_THROW(BiasSchedule::standard(1.0, 1.0, 5), std::invalid_argument);
  EXPECT_THROW(BiasSchedule::standard(1.0, 0.65, 0), std::invalid_argument);
  // eps-_1 above eps+_1 makes alpha_1 negative.
  EXPECT_THROW(BiasSchedule::standard(1.0, 0.99, 5), std::invalid_argument);
}

TEST(Schedule, ConstructionChecks) {
  EXPECT_THROW(BiasSchedule({0.0}, {0.9}, {0.1}), std::invalid_argument);
  EXPECT_THROW(BiasSchedule({0.5}, {0.3}, {0.3}), std::invalid_argument);
  EXPECT_THROW(BiasSchedule({0.5}, {1.2}, {0.3}), std::invalid_argument);
  EXPECT_THROW(BiasSchedule({0.5, 0.4}, {0.9}, {0.1}), std::invalid_argument);
  const BiasSchedule degenerate({0.5}, {0.2}, {0.6}, BiasSchedule::Check::kUnchecked);
  EXPECT_LT(degenerate.alpha(1), 0.0);
  EXPECT_THROW(degenerate.theta(0), std::out_of_range);
  EXPECT_THROW(degenerate.theta(2), std::out_of_range);
}

TEST(ClickProbability, Examples) {
  const auto s = BiasSchedule::standard(1.0, 0.65, 10);
  EXPECT_NEAR(s.click_probability(1.0, 1), 0.98, 1e-12);
  EXPECT_NEAR(s.click_probability(0.0, 1), 0.65, 1e-12);
  for (int k = 1; k <= 10; ++k)
    EXPECT_NEAR(s.click_probability(0.5, k), 0.5 * (s.click_probability(0, k) + s.click_probability(1, k)), 1e-15);
  EXPECT_THROW(s.click_probability(0.5, 11), std::out_of_range);
  EXPECT_THROW(s.click_probability(0.5, 0), std::out_of_range);
}

TEST(ClickProbability, AffineAndExaminationFormsAgree) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_schedule(rng, 8);
    for (int k = 1; k <= 8; ++k) {
      const double g = u(rng);
      const double p = s.click_probability(g, k);
      EXPECT_NEAR(p, s.theta(k) * (s.eps_plus(k) * g + s.eps_minus(k) * (1.0 - g)), 1e-15);
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
  }
}

TEST(ClickProbability, NoTrustBiasReducesToExamination) {
  std::vector<double> theta{1.0, 0.5, 0.25};
  const BiasSchedule s(theta, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0});
  for (int k = 1; k <= 3; ++k)
    for (double g : {0.0, 0.3, 1.0}) EXPECT_DOUBLE_EQ(s.click_probability(g, k), theta[k - 1] * g);
}

TEST(IpsFeasibility, StandardSettingsAreInfeasible) {
  for (double eta : {1.0, 2.0})
    for (double em : {0.65, 0.35}) EXPECT_FALSE(ips_feasibility(BiasSchedule::standard(eta, em, 20), 1e-9));
  const auto s = BiasSchedule::standard(1.0, 0.65, 2);
  EXPECT_NEAR(s.eps_plus(1) / s.eps_plus(2), 1.0103, 1e-4);
  EXPECT_DOUBLE_EQ(s.eps_minus(1) / s.eps_minus(2), 2.0);
}

TEST(IpsFeasibility, ConstantAndProportionalEpsAreFeasible) {
  EXPECT_TRUE(ips_feasibility(constant_eps(20, 0.9, 0.1), 1e-9));
  std::vector<double> em{0.4, 0.2, 0.1, 0.05}, ep(4);
  for (int k = 0; k < 4; ++k) ep[k] = 2.0 * em[k];
  EXPECT_TRUE(ips_feasibility(BiasSchedule({1, 0.5, 0.3, 0.2}, ep, em), 1e-9));
  // No trust bias: every eps- is zero.
  EXPECT_TRUE(ips_feasibility(BiasSchedule({1, 0.5}, {1, 1}, {0, 0}), 1e-9));
  EXPECT_FALSE(ips_feasibility(BiasSchedule({1, 0.5}, {1, 1}, {0.2, 0}), 1e-9));
}

TEST(FromClickRates, RecoversAlphaBeta) {
  const auto s = BiasSchedule::from_click_rates({0.9, 0.5, 0.2}, {0.6, 0.1, 0.01});
  EXPECT_NEAR(s.alpha(1), 0.3, 1e-15);
  EXPECT_NEAR(s.beta(1), 0.6, 1e-15);
  EXPECT_NEAR(s.alpha(2), 0.4, 1e-15);
  EXPECT_NEAR(s.beta(3), 0.01, 1e-15);
}

TEST(ScheduleCsv, RoundTrip) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = random_schedule(rng, 1 + trial);
    std::stringstream buf;
    write_schedule_csv(buf, s);
    EXPECT_EQ(read_schedule_csv(buf), s);
  }
  std::istringstream bad("k,theta,eps_plus,eps_minus\n1,0.5,0.9\n");
  EXPECT_THROW(read_schedule_csv(bad), std::exception);
  std::istringstream gap("k,theta,eps_plus,eps_minus\n2,0.5,0.9,0.1\n");
  EXPECT_THROW(read_schedule_csv(gap), std::exception);
}

TEST(ScheduleConfig, SectionRoundTrip) {
  std::istringstream text(schedule_config_section(2.0, 0.35, 15));
  const auto sections = parse_config(text);
  EXPECT_EQ(schedule_from_config(sections.at("bias")), BiasSchedule::standard(2.0, 0.35, 15));
  EXPECT_THROW(schedule_from_config({{"eta", "1"}}), std::invalid_argument);
}

TEST(ScheduleHash, StableAndSensitive) {
  EXPECT_EQ(schedule_hash(BiasSchedule::standard(1, 0.65, 20)), schedule_hash(BiasSchedule::standard(1, 0.65, 20)));
  EXPECT_NE(schedule_hash(BiasSchedule::standard(1, 0.65, 20)), schedule_hash(BiasSchedule::standard(1, 0.35, 20)));
  EXPECT_NE(schedule_hash(BiasSchedule::standard(1, 0.65, 20)), schedule_hash(BiasSchedule::standard(1, 0.65, 19)));
}

}  // namespace
}  // namespace cltr
