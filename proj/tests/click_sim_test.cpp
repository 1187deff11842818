#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "cltr/click_sim.hpp"
#include "cltr/dataset.hpp"
#include "test_util.hpp"

namespace cltr {
namespace {

struct Fixture {
  Dataset data = generate_synthetic(50, 8, 4, 3);
  ScoringModel production = ScoringModel::initialized(Architecture::linear(), 4, Head::kNone, 1);
  BiasSchedule schedule = BiasSchedule::standard(1.0, 0.65, 8);
};

TEST(SimulateSession, CertainClicksAndNoClicks) {
  std::mt19937_64 rng(1);
  const Ranking r{0, {2, 0, 1}};
  const BiasSchedule always({1, 1, 1}, {1, 1, 1}, {0.5, 0.2, 0.0});
  EXPECT_EQ(simulate_session(r, std::vector<double>{1, 1, 1}, always, rng), (std::vector<std::uint8_t>{1, 1, 1}));
  const BiasSchedule never({1, 0.5, 0.2}, {0.9, 0.9, 0.9}, {0, 0, 0});
  for (int i = 0; i < 100; ++i)
    EXPECT_EQ(simulate_session(r, std::vector<double>{0, 0, 0}, never, rng), (std::vector<std::uint8_t>{0, 0, 0}));
}

TEST(SimulateSession, NonRelevantAtTopClicksAtBeta) {
  std::mt19937_64 rng(7);
  const auto s = BiasSchedule::standard(1.0, 0.65, 2);
  const Ranking r{0, {0, 1}};
  const std::vector<double> gamma{0.0, 1.0};
  int clicks = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) clicks += simulate_session(r, gamma, s, rng)[0];
  EXPECT_NEAR(static_cast<double>(clicks) / n, 0.65, 0.005);
}

TEST(SimulateLog, BudgetContracts) {
  Fixture f;
  const auto one = simulate_log(f.data.train, f.production, f.schedule, 1, BudgetUnit::kSessions, 5);
  EXPECT_EQ(one.sessions.size(), 1u);

  const auto clicks = simulate_log(f.data.train, f.production, f.schedule, 1000, BudgetUnit::kClicks, 5);
  EXPECT_GE(clicks.total_clicks(), 1000);
  EXPECT_LT(clicks.total_clicks(), 1000 + 8);
  EXPECT_EQ(clicks.budget, 1000);
  EXPECT_EQ(clicks.budget_unit, BudgetUnit::kClicks);
  EXPECT_EQ(clicks.seed, 5u);

  EXPECT_THROW(simulate_log(f.data.train, f.production, f.schedule, 0, BudgetUnit::kClicks, 5), std::invalid_argument);
}

TEST(SimulateLog, DeterministicAndSeedSensitive) {
  Fixture f;
  const auto a = simulate_log(f.data.train, f.production, f.schedule, 500, BudgetUnit::kClicks, 9);
  EXPECT_EQ(a, simulate_log(f.data.train, f.production, f.schedule, 500, BudgetUnit::kClicks, 9));
  EXPECT_NE(a, simulate_log(f.data.train, f.production, f.schedule, 500, BudgetUnit::kClicks, 10));
}

TEST(SimulateLog, ProductionRankingIsStatic) {
  Fixture f;
  const auto log = simulate_log(f.data.train, f.production, f.schedule, 3000, BudgetUnit::kSessions, 2);
  std::map<int, int> ranking_of;
  for (const auto& s : log.sessions) {
    const auto [it, fresh] = ranking_of.emplace(s.query_id, s.ranking_index);
    EXPECT_EQ(it->second, s.ranking_index);
    EXPECT_EQ(s.clicks.size(), log.ranking(s).order.size());
  }
  for (const auto& q : f.data.train)
    if (ranking_of.count(q.query_id))
      EXPECT_EQ(log.rankings[ranking_of[q.query_id]], rank_query(f.production, q));
}

TEST(SimulateLog, UniformQuerySampling) {
  Fixture f;
  const int n = 100000;
  const auto log = simulate_log(f.data.train, f.production, f.schedule, n, BudgetUnit::kSessions, 4);
  std::map<int, int> counts;
  for (const auto& s : log.sessions) ++counts[s.query_id];
  ASSERT_EQ(counts.size(), f.data.train.size());
  const double expected = static_cast<double>(n) / counts.size();
  double chi2 = 0.0;
  for (const auto& [q, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 0.999 quantile of chi-square with 34 degrees of freedom.
  ASSERT_EQ(counts.size(), 35u);
  EXPECT_LT(chi2, 65.25);
}

TEST(SimulateLog, PerRankClickRatesCalibrated) {
  Fixture f;
  for (double eta : {1.0, 2.0}) {
    const auto schedule = BiasSchedule::standard(eta, 0.65, 8);
    const auto log = simulate_log(f.data.train, f.production, schedule, 100000, BudgetUnit::kSessions, 6);
    std::vector<double> shown(8), clicked(8), relevant(8);
    std::map<int, const Query*> by_id;
    for (const auto& q : f.data.train) by_id[q.query_id] = &q;
    for (const auto& s : log.sessions) {
      const auto& order = log.ranking(s).order;
      for (std::size_t r = 0; r < order.size(); ++r) {
        shown[r] += 1;
        clicked[r] += s.clicks[r];
        relevant[r] += by_id[s.query_id]->documents[order[r]].binary_label;
      }
    }
    for (int k = 1; k <= 8; ++k) {
      const double n = shown[k - 1];
      const double expected = schedule.alpha(k) * relevant[k - 1] / n + schedule.beta(k);
      const double se = std::sqrt(expected * (1 - expected) / n);
      EXPECT_LE(std::abs(clicked[k - 1] / n - expected), 3 * se) << "eta " << eta << " rank " << k;
    }
  }
}

TEST(ClickLogText, RoundTrip) {
  Fixture f;
  for (auto unit : {BudgetUnit::kClicks, BudgetUnit::kSessions}) {
    const auto log = simulate_log(f.data.train, f.production, f.schedule, 300, unit, 12);
    std::stringstream buf;
    write_click_log(buf, log);
    const auto back = read_click_log(buf);
    EXPECT_EQ(back, log);
  }
}

TEST(ClickLogText, SessionLineFormat) {
  const BiasSchedule s({1, 0.5}, {0.9, 0.9}, {0.1, 0.1});
  const auto log = cltr_test::one_session_log(Ranking{7, {1, 0}}, {0, 1}, s);
  std::stringstream buf;
  write_click_log(buf, log);
  EXPECT_NE(buf.str().find("session 0 qid:7 ranking:1,0 clicks:01\n"), std::string::npos);

  std::istringstream bad("# cltr-clicklog 1\nsession 0 qid:7 ranking:1,0 clicks:0\n");
  EXPECT_THROW(read_click_log(bad), std::exception);
  std::istringstream wrong("not a click log\n");
  EXPECT_THROW(read_click_log(wrong), std::exception);
}

TEST(ImpressionCells, SumToSessionTotals) {
  Fixture f;
  const auto log = simulate_log(f.data.train, f.production, f.schedule, 2000, BudgetUnit::kClicks, 1);
  std::int64_t impressions = 0, clicks = 0;
  const auto cells = impression_cells(log);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    impressions += cells[i].impressions;
    clicks += cells[i].clicks;
    EXPECT_LE(cells[i].clicks, cells[i].impressions);
    if (i > 0)
      EXPECT_LT(std::tie(cells[i - 1].query_id, cells[i - 1].doc_id, cells[i - 1].rank),
                std::tie(cells[i].query_id, cells[i].doc_id, cells[i].rank));
  }
  EXPECT_EQ(clicks, log.total_clicks());
  EXPECT_EQ(impressions, static_cast<std::int64_t>(log.sessions.size()) * 8);
}

}  // namespace
}  // namespace cltr
